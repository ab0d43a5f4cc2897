use handwave_core::geometry::fixture::fixture_surface;
use handwave_core::geometry::io::{read_ply, read_xyz, DistanceFieldFile};
use handwave_core::geometry::{build_surface, register_sensors, DistanceFields, HandSurface};
use handwave_core::recon::{reconstruct as reconstruct_field, rms_csv, rms_surface_map, WaveField, WeightField, WeightParams};
use handwave_core::signal::{project_all, similarity_matrix, ChannelSet, ProjectionOptions, SimilarityOptions};
use handwave_core::sim::Scenario;
use handwave_core::wire::{decode_stream, encode_stream, frames_from_csv, frames_to_csv, schedule_throughput, BusTopology};
use handwave_core::{default_config, BranchSet, Digit, FrameStream, FullScale, SensorConfig};

use crate::error::{data, CliError, Result};
use crate::manifest::OutDir;
use crate::render::{matrix_pgm, surface_pgm};
use crate::{
    DecodeArgs, EncodeArgs, GeometryArgs, OutArgs, ProjectArgs, ProjectionArgs, ReconstructArgs, RmsMapArgs, RunArgs,
    SimilarityArgs, SimulateArgs, Stage, ThroughputArgs,
};

fn text(bytes: Vec<u8>, what: &str) -> Result<String> {
    String::from_utf8(bytes).map_err(|_| CliError::Data(format!("{what} is not UTF-8 text")))
}

fn load_geometry(g: &GeometryArgs, out: &mut OutDir) -> Result<(HandSurface, SensorConfig)> {
    if !(g.hand_scale > 0.0 && g.hand_scale.is_finite()) {
        return Err(CliError::Usage(format!("--hand-scale must be positive, got {}", g.hand_scale)));
    }
    let surface = match &g.mesh {
        None => {
            out.param("mesh", "fixture");
            fixture_surface().and_then(|s| s.scaled(g.hand_scale)).map_err(data)?
        }
        Some(path) => {
            let body = text(out.read_file("mesh", path)?, "mesh")?;
            let cloud = match path.extension().and_then(|e| e.to_str()) {
                Some("ply") => read_ply(&body),
                Some("xyz") | Some("txt") => read_xyz(&body),
                _ => return Err(CliError::Usage(format!("{}: mesh must be .ply or .xyz", path.display()))),
            }
            .map_err(data)?;
            build_surface(&cloud, g.neighbors).map_err(data)?
        }
    };
    for w in surface.warnings() {
        log::warn!("{w}");
    }
    let config = match &g.sensors {
        None => default_config(g.hand_scale).map_err(data)?,
        Some(path) => SensorConfig::from_text(&text(out.read_file("sensors", path)?, "sensor file")?).map_err(data)?,
    };
    out.param("hand_scale", g.hand_scale);
    out.param("neighbors", surface.k());
    out.param("vertices", surface.len());
    Ok((surface, config))
}

fn projection_options(p: &ProjectionArgs) -> Result<ProjectionOptions> {
    let opts = ProjectionOptions { window: p.window, hop: p.hop.unwrap_or(p.window / 2), centered: !p.uncentered };
    opts.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(opts)
}

fn decode_bytes(bytes: &[u8]) -> Result<FrameStream> {
    let decoded = decode_stream(bytes).map_err(data)?;
    for w in &decoded.warnings {
        log::warn!("{w}");
    }
    let missing: u64 = decoded.drops.iter().map(|d| d.missing).sum();
    if missing > 0 {
        log::warn!("{missing} frames dropped in {} gaps", decoded.drops.len());
    }
    Ok(decoded.stream)
}

fn project_stream(stream: &FrameStream, opts: &ProjectionOptions) -> Result<ChannelSet> {
    let series = stream.calibrated_series().map_err(data)?;
    let channels = project_all(&series, opts).map_err(data)?;
    ChannelSet::new(stream.rate, channels).map_err(data)
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    let mut out = OutDir::create(&a.out.out)?;
    let mut scenario = Scenario::from_toml(&text(out.read_file("scenario", &a.scenario)?, "scenario")?).map_err(data)?;
    if let Some(seed) = a.seed {
        scenario.recording.seed = seed;
    }
    if let Some(range) = a.range {
        scenario.recording.range = range;
    }
    let (surface, config) = load_geometry(&a.geometry, &mut out)?;
    let sim = scenario.run(&surface, &config).map_err(data)?;
    log::info!(
        "source vertex {}, {} frames, sensors snapped at most {:.2} mm",
        sim.event.source,
        sim.stream.frames.len(),
        sim.registration.max_snap
    );
    out.param("source_vertex", sim.event.source);
    out.param("frames", sim.stream.frames.len());
    out.param("seed", scenario.recording.seed);
    out.write("scenario.toml", scenario.to_toml().as_bytes())?;
    out.write("sensors.txt", config.to_text().as_bytes())?;
    out.write("stream.bin", &encode_stream(&sim.stream).map_err(data)?)?;
    let truth = rms_surface_map(&sim.field, handwave_core::recon::RMS_WINDOW_MS).map_err(data)?;
    out.write("truth_rms.csv", rms_csv(&truth).as_bytes())?;
    out.finish("simulate")
}

pub fn encode(a: &EncodeArgs) -> Result<()> {
    let mut out = OutDir::create(&a.out.out)?;
    let range = FullScale::from_g(a.range).map_err(|e| CliError::Usage(e.to_string()))?;
    let csv = text(out.read_input("frames", a.frames.as_deref(), "frames.csv", "decode")?, "frame CSV")?;
    let stream = frames_from_csv(&csv, a.rate, range).map_err(data)?;
    out.param("frames", stream.frames.len());
    out.write("stream.bin", &encode_stream(&stream).map_err(data)?)?;
    out.finish("encode")
}

pub fn decode(a: &DecodeArgs) -> Result<()> {
    let mut out = OutDir::create(&a.out.out)?;
    let bytes = out.read_input("stream", a.stream.as_deref(), "stream.bin", "simulate")?;
    let stream = decode_bytes(&bytes)?;
    out.param("frames", stream.frames.len());
    out.write("frames.csv", frames_to_csv(&stream).as_bytes())?;
    out.finish("decode")
}

pub fn project(a: &ProjectArgs) -> Result<()> {
    let opts = projection_options(&a.projection)?;
    let mut out = OutDir::create(&a.out.out)?;
    let stream = decode_bytes(&out.read_input("stream", a.stream.as_deref(), "stream.bin", "simulate")?)?;
    let set = project_stream(&stream, &opts)?;
    out.param("window", opts.window);
    out.param("hop", opts.hop);
    out.param("centered", opts.centered);
    out.param("rate", set.rate);
    out.write("channels.csv", set.to_csv().as_bytes())?;
    out.finish("project")
}

pub fn similarity(a: &SimilarityArgs) -> Result<()> {
    let opts = projection_options(&a.projection)?;
    let mut out = OutDir::create(&a.out.out)?;
    let mut recordings: Vec<(String, ChannelSet)> = Vec::new();
    for (i, path) in a.recordings.iter().enumerate() {
        let bytes = out.read_file(&format!("recording{i}"), path)?;
        let set = if path.extension().is_some_and(|e| e == "bin") {
            project_stream(&decode_bytes(&bytes)?, &opts)?
        } else {
            ChannelSet::from_csv(&text(bytes, "channel CSV")?, a.rate).map_err(data)?
        };
        let stem = path.file_stem().map_or_else(|| format!("r{i}"), |s| s.to_string_lossy().into_owned());
        let mut name = stem.clone();
        let mut n = 2;
        while recordings.iter().any(|(existing, _)| *existing == name) {
            name = format!("{stem}#{n}");
            n += 1;
        }
        recordings.push((name, set));
    }
    let matrix = similarity_matrix(&recordings, &SimilarityOptions { max_lag: a.max_lag }).map_err(data)?;
    out.write("similarity.csv", matrix.to_csv().as_bytes())?;
    out.write("similarity.pgm", &matrix_pgm(&matrix.values, 16))?;
    out.finish("similarity")
}

pub fn reconstruct(a: &ReconstructArgs) -> Result<()> {
    let params = WeightParams { gain: a.gain, alpha: a.alpha, c: a.c, rectify: !a.no_rectify };
    params.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let mut out = OutDir::create(&a.out.out)?;
    let csv = text(out.read_input("channels", a.channels.as_deref(), "channels.csv", "project")?, "channel CSV")?;
    let channels = ChannelSet::from_csv(&csv, a.rate).map_err(data)?;
    let (surface, config) = load_geometry(&a.geometry, &mut out)?;
    let registration = register_sensors(&surface, &config).map_err(data)?;
    let distances = DistanceFields::compute(&surface, &registration).map_err(data)?;
    let weights = WeightField::from_distances(&distances, params).map_err(data)?;
    let orphans = weights.orphans();
    if !orphans.is_empty() {
        log::warn!("{} vertices are out of reach of every sensor and stay at zero", orphans.len());
    }
    let field = reconstruct_field(&channels, &weights).map_err(data)?;
    let rms = rms_surface_map(&field, a.window_ms).map_err(data)?;
    out.param("gain", a.gain);
    out.param("alpha", a.alpha);
    out.param("c", a.c);
    out.param("rectify", params.rectify);
    out.param("window_ms", a.window_ms);
    out.write("field.bin", &field.to_bytes())?;
    if a.save_distances {
        out.write("distances.bin", &DistanceFieldFile::encode(&distances))?;
    }
    out.write("rms.csv", rms_csv(&rms).as_bytes())?;
    out.finish("reconstruct")
}

pub fn rms_map(a: &RmsMapArgs) -> Result<()> {
    let mut out = OutDir::create(&a.out.out)?;
    let field = WaveField::from_bytes(&out.read_input("field", a.field.as_deref(), "field.bin", "reconstruct")?).map_err(data)?;
    let (surface, _) = load_geometry(&a.geometry, &mut out)?;
    if surface.len() != field.vertices {
        return Err(CliError::Data(format!(
            "field has {} vertices, surface has {}",
            field.vertices,
            surface.len()
        )));
    }
    let end = match a.end_ms {
        Some(ms) => ((ms / 1000.0 * field.rate).round() as usize).min(field.frames),
        None => field.frames,
    };
    let rms = rms_surface_map(&field.slice(0, end), a.window_ms).map_err(data)?;
    out.param("window_ms", a.window_ms);
    out.param("end_frame", end);
    out.write("rms.csv", rms_csv(&rms).as_bytes())?;
    out.write("rms.pgm", &surface_pgm(&surface, &rms))?;
    out.finish("rms-map")
}

pub fn throughput(a: &ThroughputArgs) -> Result<()> {
    if !(a.clock_hz > 0.0 && a.clock_hz.is_finite()) {
        return Err(CliError::Usage(format!("--clock-hz must be positive, got {}", a.clock_hz)));
    }
    let branches = if a.branches.is_empty() {
        BranchSet::ALL
    } else {
        let mut set = BranchSet::empty();
        for b in &a.branches {
            set = set.with(b.trim().parse::<Digit>().map_err(CliError::Usage)?);
        }
        set
    };
    let topology = BusTopology::with_branches(branches);
    println!("{:.1} frames/s", schedule_throughput(a.clock_hz, &topology));
    Ok(())
}

pub fn run(a: &RunArgs) -> Result<()> {
    let mut stages = a.stages.clone();
    stages.sort();
    stages.dedup();
    let out = |o: &OutArgs| OutArgs { out: o.out.clone() };
    let projection = ProjectionArgs { window: handwave_core::signal::pca::DEFAULT_WINDOW, hop: None, uncentered: false };
    for stage in stages {
        match stage {
            Stage::Simulate => simulate(&SimulateArgs {
                out: out(&a.out),
                scenario: a.scenario.clone(),
                seed: None,
                range: None,
                geometry: a.geometry.clone(),
            })?,
            Stage::Decode => decode(&DecodeArgs { out: out(&a.out), stream: None })?,
            Stage::Project => project(&ProjectArgs { out: out(&a.out), stream: None, projection: projection.clone() })?,
            Stage::Reconstruct => reconstruct(&ReconstructArgs {
                out: out(&a.out),
                channels: None,
                rate: handwave_core::DEFAULT_RATE_HZ,
                alpha: handwave_core::recon::DEFAULT_ALPHA_MM,
                c: handwave_core::recon::DEFAULT_C,
                gain: handwave_core::recon::DEFAULT_GAIN,
                no_rectify: false,
                window_ms: handwave_core::recon::RMS_WINDOW_MS,
                save_distances: false,
                geometry: a.geometry.clone(),
            })?,
            Stage::RmsMap => rms_map(&RmsMapArgs {
                out: out(&a.out),
                field: None,
                window_ms: handwave_core::recon::RMS_WINDOW_MS,
                end_ms: None,
                geometry: a.geometry.clone(),
            })?,
        }
        log::info!("stage {} done", stage_name(stage));
    }
    Ok(())
}

fn stage_name(s: Stage) -> &'static str {
    match s {
        Stage::Simulate => "simulate",
        Stage::Decode => "decode",
        Stage::Project => "project",
        Stage::Reconstruct => "reconstruct",
        Stage::RmsMap => "rms-map",
    }
}
