//! Command-line frontend. Diagnostics go to stderr, data to `-o` targets or
//! stdout. Exit codes: 0 success, 1 failed validation or analysis
//! assertion, 2 usage or parse errors.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use polysub::algebra::{self, Decomposition, PairRelation};
use polysub::analysis;
use polysub::engine;
use polysub::geometry::{D4Transform, Placement};
use polysub::model::{self, MarkLayer, Tileset};
use polysub::render::{render_svg, RenderLayer, RenderOptions};

#[derive(Parser)]
#[command(
    name = "polysub",
    about = "Polyomino substitution tilesets: validate, expand, render, analyze, transform",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Structural and exact-cover validation of a tileset file.
    Validate(ValidateArgs),
    /// Expand one tile of a tileset into a patch.
    Expand(ExpandArgs),
    /// Render a patch file as SVG.
    Render(RenderArgs),
    /// Analyze a patch file; requested sections are emitted as one JSON
    /// report.
    Analyze(AnalyzeArgs),
    /// Rewrite a tileset: fuse, dedup, or eliminate.
    Transform(TransformArgs),
}

#[derive(Args)]
struct ValidateArgs {
    /// Tileset file.
    tileset: PathBuf,
    /// Also check mark coherence (stored super layer against derived).
    #[arg(long)]
    coherence: bool,
}

#[derive(Args)]
struct ExpandArgs {
    /// Tileset file.
    tileset: PathBuf,
    /// Seed tile id.
    #[arg(long)]
    tile: String,
    /// Number of expansions.
    #[arg(long)]
    depth: u32,
    /// Output file (default stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Stream placements line by line instead of building the document in
    /// memory; required for very deep expansions.
    #[arg(long)]
    stream: bool,
}

#[derive(Args)]
struct RenderArgs {
    /// Patch file (single-document or streamed form). `-` reads stdin.
    patch: PathBuf,
    /// Tileset file; defaults to `<tileset-name>.tiles` next to the patch.
    #[arg(long)]
    tileset: Option<PathBuf>,
    /// Output file (default stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Pixels per cell.
    #[arg(long, default_value_t = 10)]
    unit: u32,
    /// Layers to draw: shape, tile-marks, super-marks.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    layers: Vec<String>,
    /// Palette overrides as tile=color pairs.
    #[arg(long, value_delimiter = ',')]
    palette: Vec<String>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Patch file. `-` reads stdin.
    patch: PathBuf,
    /// Tileset file; defaults to `<tileset-name>.tiles` next to the patch.
    #[arg(long)]
    tileset: Option<PathBuf>,
    /// Check for overlaps and interior holes; failures exit 1.
    #[arg(long)]
    cover: bool,
    /// Trace closed curves in a mark layer and match them against the
    /// snowflake family.
    #[arg(long)]
    curves: bool,
    /// Mark layer for curve and stitch analyses: tile or super.
    #[arg(long, default_value = "tile")]
    layer: String,
    /// Histogram of merged stitch lengths.
    #[arg(long)]
    stitches: bool,
    /// Extract bar families.
    #[arg(long)]
    bars: bool,
    /// Bar qualification threshold (fraction of the extent).
    #[arg(long, default_value_t = 0.8)]
    bar_coverage: f64,
    /// Scan the central third of the patch for translation periods up to
    /// this radius.
    #[arg(long)]
    period: Option<i64>,
    /// Substitution-matrix statistics at the given empirical depth.
    #[arg(long)]
    stats: Option<u32>,
    /// Output file (default stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TransformArgs {
    /// Tileset file.
    tileset: PathBuf,
    #[command(subcommand)]
    op: TransformOp,
    /// Output file (default stdout).
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum TransformOp {
    /// Replace a totally-paired pair of tiles by their union.
    Fuse {
        tile_a: String,
        tile_b: String,
        /// Relative placement of tile_b in tile_a's frame: transform symbol.
        #[arg(long, default_value = "R0")]
        transform: String,
        /// Relative offset "dx,dy".
        #[arg(long, default_value = "0,0")]
        offset: String,
        /// Id of the fused tile.
        #[arg(long)]
        new_id: String,
    },
    /// Merge congruent tiles (shape, marks, and rules).
    Dedup,
    /// Remove a tile, rewriting its occurrences via a decomposition found
    /// by exhaustive search.
    Eliminate {
        tile: String,
        /// Maximum number of parts to search for.
        #[arg(long, default_value_t = 4)]
        max_parts: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn read_input(path: &PathBuf) -> Result<Vec<u8>, String> {
    if path.as_os_str() == "-" {
        let mut buf = Vec::new();
        std::io::stdin()
            .read_to_end(&mut buf)
            .map_err(|e| e.to_string())?;
        Ok(buf)
    } else {
        std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))
    }
}

fn write_output(path: &Option<PathBuf>, bytes: &[u8]) -> Result<(), String> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| format!("{}: {e}", p.display())),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| e.to_string()),
    }
}

fn load_tileset(path: &PathBuf) -> Result<Tileset, String> {
    let bytes = read_input(path)?;
    model::parse_tileset(&bytes).map_err(|e| format!("{}: {e}", path.display()))
}

/// Resolve the tileset for a patch: an explicit path, or
/// `<tileset-name>.tiles` next to the patch file / in the working
/// directory.
fn tileset_for_patch(
    explicit: &Option<PathBuf>,
    patch_path: &PathBuf,
    patch: &engine::Patch,
) -> Result<Tileset, String> {
    if let Some(p) = explicit {
        return load_tileset(p);
    }
    let file = format!("{}.tiles", patch.tileset_name);
    let mut candidate = patch_path.clone();
    candidate.set_file_name(&file);
    if candidate.exists() {
        return load_tileset(&candidate);
    }
    let local = PathBuf::from(&file);
    if local.exists() {
        return load_tileset(&local);
    }
    Err(format!(
        "cannot find tileset {:?} for the patch; pass --tileset",
        patch.tileset_name
    ))
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Validate(args) => {
            let ts = load_tileset(&args.tileset)?;
            let report = model::validate_tileset(&ts).map_err(|e| e.to_string())?;
            let cells = |v: &[polysub::Cell]| {
                v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
            };
            let mut failed = false;
            for rule in &report.rules {
                if !rule.cover.is_valid() {
                    failed = true;
                    eprintln!(
                        "rule {:?}: overlaps [{}] holes [{}] strays [{}]",
                        rule.cover.parent,
                        cells(&rule.cover.overlap_cells),
                        cells(&rule.cover.hole_cells),
                        cells(&rule.cover.stray_cells)
                    );
                }
                if !rule.area_identity {
                    failed = true;
                    eprintln!(
                        "rule {:?}: child areas {} != scale^2 x parent area {}",
                        rule.cover.parent, rule.child_area_sum, rule.expected_area
                    );
                }
            }
            if args.coherence {
                let coherence = model::mark_coherence_report(&ts).map_err(|e| e.to_string())?;
                for tile in &coherence.tiles {
                    if !tile.full_match() {
                        failed = true;
                        eprintln!(
                            "tile {:?}: super layer missing {} segments, extra {}",
                            tile.tile,
                            tile.missing.len(),
                            tile.extra.len()
                        );
                    }
                    if !tile.continuous() {
                        failed = true;
                        eprintln!(
                            "tile {:?}: curve dead ends inside the supertile at {:?}",
                            tile.tile, tile.continuity_breaks
                        );
                    }
                }
            }
            if failed {
                Ok(ExitCode::from(1))
            } else {
                eprintln!(
                    "{}: {} tiles, {} rules, all valid",
                    ts.name,
                    ts.tiles.len(),
                    ts.rules.len()
                );
                Ok(ExitCode::SUCCESS)
            }
        }
        Command::Expand(args) => {
            let ts = load_tileset(&args.tileset)?;
            if args.stream {
                let mut out: Box<dyn Write> = match &args.output {
                    Some(p) => Box::new(
                        std::fs::File::create(p).map_err(|e| format!("{}: {e}", p.display()))?,
                    ),
                    None => Box::new(std::io::stdout().lock()),
                };
                let mut out = std::io::BufWriter::new(&mut out);
                let header = serde_json::json!({
                    "tileset": ts.name, "level": args.depth, "streaming": true
                });
                writeln!(out, "{header}").map_err(|e| e.to_string())?;
                let mut failure: Option<String> = None;
                engine::expand_tile_visit(&ts, &args.tile, args.depth, |tile, pl| {
                    if failure.is_some() {
                        return;
                    }
                    let doc = serde_json::json!({
                        "tile": tile, "t": pl.transform.symbol(), "o": [pl.offset.0, pl.offset.1]
                    });
                    if let Err(e) = writeln!(out, "{doc}") {
                        failure = Some(e.to_string());
                    }
                })
                .map_err(|e| e.to_string())?;
                if let Some(e) = failure {
                    return Err(e);
                }
                out.flush().map_err(|e| e.to_string())?;
                Ok(ExitCode::SUCCESS)
            } else {
                let patch =
                    engine::expand_tile(&ts, &args.tile, args.depth).map_err(|e| e.to_string())?;
                write_output(&args.output, &engine::serialize_patch(&patch))?;
                Ok(ExitCode::SUCCESS)
            }
        }
        Command::Render(args) => {
            let bytes = read_input(&args.patch)?;
            let patch = engine::parse_patch(&bytes)?;
            let ts = tileset_for_patch(&args.tileset, &args.patch, &patch)?;
            let mut opts = RenderOptions {
                unit: args.unit,
                ..RenderOptions::default()
            };
            if !args.layers.is_empty() {
                let mut layers = BTreeSet::new();
                for name in &args.layers {
                    layers.insert(
                        RenderLayer::from_name(name)
                            .ok_or_else(|| format!("unknown layer {name:?}"))?,
                    );
                }
                opts.layers = layers;
            }
            for entry in &args.palette {
                let (tile, color) = entry
                    .split_once('=')
                    .ok_or_else(|| format!("palette entries are tile=color, got {entry:?}"))?;
                opts.palette.insert(tile.to_string(), color.to_string());
            }
            let svg = render_svg(&ts, &patch, &opts).map_err(|e| e.to_string())?;
            write_output(&args.output, &svg)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Analyze(args) => analyze(args),
        Command::Transform(args) => {
            let ts = load_tileset(&args.tileset)?;
            let out = match args.op {
                TransformOp::Fuse {
                    tile_a,
                    tile_b,
                    transform,
                    offset,
                    new_id,
                } => {
                    let t = D4Transform::from_symbol(&transform)
                        .ok_or_else(|| format!("unknown transform {transform:?}"))?;
                    let (dx, dy) = offset
                        .split_once(',')
                        .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
                        .ok_or_else(|| format!("offset must be dx,dy; got {offset:?}"))?;
                    let rel = PairRelation {
                        tile_a,
                        tile_b,
                        relative: Placement::new(t, (dx, dy)),
                    };
                    algebra::fuse(&ts, &rel, &new_id).map_err(|e| e.to_string())?
                }
                TransformOp::Dedup => {
                    let (out, mapping) = algebra::dedup(&ts).map_err(|e| e.to_string())?;
                    for (from, to) in &mapping {
                        eprintln!("merged {from:?} into {to:?}");
                    }
                    out
                }
                TransformOp::Eliminate { tile, max_parts } => {
                    let ds = algebra::discover_decompositions(&ts, &tile, max_parts)
                        .map_err(|e| e.to_string())?;
                    let d: Decomposition = ds
                        .into_iter()
                        .next()
                        .ok_or_else(|| format!("no decomposition of {tile:?} found"))?;
                    eprintln!(
                        "eliminating {:?} via {:?}",
                        tile,
                        d.parts.iter().map(|(id, _)| id.as_str()).collect::<Vec<_>>()
                    );
                    algebra::eliminate(&ts, &d).map_err(|e| e.to_string())?
                }
            };
            write_output(&args.output, &model::serialize_tileset(&out))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn analyze(args: AnalyzeArgs) -> Result<ExitCode, String> {
    let bytes = read_input(&args.patch)?;
    let patch = engine::parse_patch(&bytes)?;
    let ts = tileset_for_patch(&args.tileset, &args.patch, &patch)?;
    let layer = match args.layer.as_str() {
        "tile" => MarkLayer::Tile,
        "super" => MarkLayer::Super,
        other => return Err(format!("unknown layer {other:?}; use tile or super")),
    };
    let mut report = serde_json::Map::new();
    let mut failed = false;

    if args.cover {
        let cover = analysis::cover_check(&ts, &patch).map_err(|e| e.to_string())?;
        if !cover.clean() {
            failed = true;
            eprintln!(
                "cover check failed: {} overlaps, {} holes",
                cover.overlaps.len(),
                cover.holes.len()
            );
        }
        report.insert(
            "cover".into(),
            serde_json::json!({
                "overlaps": cover.overlaps.iter().map(|c| [c.x, c.y]).collect::<Vec<_>>(),
                "holes": cover.holes.iter().map(|c| [c.x, c.y]).collect::<Vec<_>>(),
                "clean": cover.clean(),
            }),
        );
    }
    if args.curves {
        let marks = analysis::patch_marks(&ts, &patch, layer).map_err(|e| e.to_string())?;
        let trace = analysis::trace_closed_curves(&marks);
        let mut curves = Vec::new();
        let mut unmatched = 0usize;
        for w in &trace.closed {
            let order = analysis::match_snowflake(w);
            if order.is_none() {
                unmatched += 1;
            }
            curves.push(serde_json::json!({
                "corners": w.len(),
                "turning": w.turning_number(),
                "snowflake_order": order,
            }));
        }
        report.insert(
            "curves".into(),
            serde_json::json!({
                "closed": curves,
                "open_threads": trace.open_threads,
                "junction_points": trace.junction_points,
                "unmatched_closed": unmatched,
            }),
        );
        if unmatched > 0 {
            failed = true;
            eprintln!("{unmatched} closed curves match no snowflake order");
        }
    }
    if args.stitches {
        let marks = analysis::patch_marks(&ts, &patch, layer).map_err(|e| e.to_string())?;
        let hist = analysis::stitch_histogram(&marks);
        let obj: serde_json::Map<String, serde_json::Value> = hist
            .iter()
            .map(|(k, v)| (analysis::cell_units(*k), serde_json::json!(v)))
            .collect();
        report.insert("stitches".into(), serde_json::Value::Object(obj));
    }
    if args.bars {
        let marks = analysis::patch_marks(&ts, &patch, layer).map_err(|e| e.to_string())?;
        let bars = analysis::extract_bars(&marks, args.bar_coverage);
        let families: Vec<_> = bars
            .families
            .iter()
            .map(|f| {
                serde_json::json!({
                    "direction": if f.horizontal { "horizontal" } else { "vertical" },
                    "lines": f.lines,
                    "spacings": f.spacings,
                    "stitch_lengths": f.stitch_lengths.iter()
                        .map(|(k, v)| (analysis::cell_units(*k), serde_json::json!(v)))
                        .collect::<serde_json::Map<_, _>>(),
                    "fibonacci_factor": analysis::fibonacci_factor_check(&f.spacings),
                })
            })
            .collect();
        let coverage: Vec<_> = bars
            .line_coverage
            .iter()
            .map(|(h, line, frac)| {
                serde_json::json!({
                    "direction": if *h { "horizontal" } else { "vertical" },
                    "line": line,
                    "coverage": frac,
                })
            })
            .collect();
        report.insert(
            "bars".into(),
            serde_json::json!({
                "threshold": bars.coverage_threshold,
                "families": families,
                "line_coverage": coverage,
            }),
        );
    }
    if let Some(radius) = args.period {
        let cells = engine::patch_cells(&ts, &patch).map_err(|e| e.to_string())?;
        let bounds = cells
            .iter()
            .fold(None::<(i64, i64, i64, i64)>, |acc, c| match acc {
                None => Some((c.x, c.y, c.x, c.y)),
                Some((a, b, x, y)) => Some((a.min(c.x), b.min(c.y), x.max(c.x), y.max(c.y))),
            })
            .ok_or("empty patch")?;
        let window = analysis::Window::central_third(bounds);
        let periods = analysis::periodicity_scan(&ts, &patch, window, radius)
            .map_err(|e| e.to_string())?;
        report.insert(
            "periods".into(),
            serde_json::json!({
                "window": [window.min_x, window.min_y, window.max_x, window.max_y],
                "radius": radius,
                "vectors": periods,
            }),
        );
    }
    if let Some(depth) = args.stats {
        let stats = analysis::substitution_stats(&ts, depth).map_err(|e| e.to_string())?;
        report.insert(
            "stats".into(),
            serde_json::json!({
                "tiles": stats.matrix.tiles,
                "matrix": stats.matrix.counts,
                "perron_value": stats.perron_value,
                "perron_vector": stats.perron_vector,
                "empirical_frequencies": stats.empirical_frequencies,
                "seed": stats.seed,
                "depth": stats.depth,
                "l1_distance": stats.l1_distance,
                "area_identity": analysis::matrix_area_identity(&ts, &stats.matrix),
            }),
        );
    }
    let mut bytes =
        serde_json::to_vec_pretty(&serde_json::Value::Object(report)).map_err(|e| e.to_string())?;
    bytes.push(b'\n');
    write_output(&args.output, &bytes)?;
    Ok(if failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}
