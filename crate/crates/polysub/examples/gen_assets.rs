fn main() {
    for (file, ts) in [
        ("chair.tiles", polysub::assets::chair()),
        ("ax-seed.tiles", polysub::assets::ax_seed()),
        ("ax5.tiles", polysub::assets::ax5()),
        ("ax.tiles", polysub::assets::ax()),
    ] {
        let path = std::path::Path::new("assets").join(file);
        std::fs::write(&path, polysub::model::serialize_tileset(&ts)).unwrap();
        println!("wrote {}", path.display());
    }
}
