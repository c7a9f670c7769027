use std::path::Path;

use eyetwin::harness::{
    build_dataset, identity_model, load_report, render_frame, run_sweep, seeds, to_csv, trend_svg, write_report,
    DatasetOptions, DatasetSpec, FrameInfo, FrameLabel, Percentile, SweepSpec,
};
use eyetwin::optics::Pipeline;
use eyetwin::scene::{gaze_targets, SlippageTransform};
use eyetwin::{Error, Exec, GazeSample};
use serde_json::{json, Value};

use crate::provenance;
use crate::Failure;

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Copy)]
pub struct Global {
    pub seed: Option<u64>,
    pub force: bool,
    pub workers: Option<usize>,
}

fn guard(out: &Path, names: &[&str], force: bool) -> Result<(), Failure> {
    for name in names {
        let p = out.join(name);
        if p.exists() && !force {
            return Err(Failure::Usage(format!("{} already exists; pass --force to overwrite", p.display())));
        }
    }
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    Ok(())
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn dataset_spec(config: Option<&Path>, command: &str, g: &Global) -> Result<(DatasetSpec, Value), Failure> {
    let (mut spec, args) = match config {
        Some(p) => {
            let l = provenance::load::<DatasetSpec>(p, command)?;
            (l.config, l.args)
        }
        None => (DatasetSpec::default(), Value::Null),
    };
    if let Some(s) = g.seed {
        spec.master_seed = s;
    }
    spec.validate()?;
    Ok((spec, args))
}

/// An explicit flag wins over the value stored in a provenance record.
fn arg_or<T: serde::de::DeserializeOwned>(flag: Option<T>, args: &Value, key: &str, default: T) -> T {
    flag.or_else(|| serde_json::from_value(args.get(key)?.clone()).ok()).unwrap_or(default)
}

pub fn render(
    g: &Global,
    config: Option<&Path>,
    out: &Path,
    identity: Option<u64>,
    target: Option<usize>,
    camera: Option<usize>,
) -> Result<(), Failure> {
    let (spec, args) = dataset_spec(config, "render", g)?;
    let id = arg_or(identity, &args, "identity", 0);
    let t = arg_or(target, &args, "target", 0);
    let cam = arg_or(camera, &args, "camera", spec.camera_id);
    let count = spec.targets.count;
    if t >= count {
        return Err(Failure::Usage(format!("target index {t} is outside the valid range [0, {count})")));
    }
    let camera = spec.rig.camera(cam).map_err(|e| Failure::Usage(format!("camera {cam}: {e}")))?;
    guard(out, &[provenance::FILE_NAME], g.force)?;

    let gaze = gaze_targets(count, spec.targets.half_fov_deg)?[t];
    let frame = FrameInfo {
        sample: GazeSample::new(gaze, t, id)?,
        slip_index: 0,
        slippage: SlippageTransform::new(0.0, 0.0, 0.0),
        slippage_seed: seeds::slippage_seed(spec.master_seed, id, t, 0),
        noise_seed: seeds::noise_seed(spec.master_seed, id, t, 0),
    };
    let clean = render_frame(&identity_model(&spec, id), &frame, &spec.rig, cam, Exec::default())?;
    let pipeline = Pipeline::new(spec.optics, camera.intrinsics.width, camera.intrinsics.height)?;
    let q = pipeline.run(&clean, frame.noise_seed)?;

    clean.save_etlf(&out.join("frame.etlf"))?;
    q.save_pgm(&out.join("frame.pgm"))?;
    let label = FrameLabel { identity_id: id, target_index: t, gaze: gaze.into(), slippage: [0.0; 3], camera_id: cam };
    let label = json!({ "label": label, "frame": frame });
    write(&out.join("frame.json"), serde_json::to_string_pretty(&label).expect("label serializes").as_bytes())?;
    provenance::write(out, "render", &spec, json!({ "identity": id, "target": t, "camera": cam }))?;
    println!("rendered identity {id}, target {t}, camera {cam} into {}", out.display());
    Ok(())
}

pub fn dataset(g: &Global, config: Option<&Path>, out: &Path, clean: bool) -> Result<(), Failure> {
    let (spec, args) = dataset_spec(config, "dataset", g)?;
    let clean = clean || arg_or(None, &args, "clean", false);
    guard(out, &["manifest.json", provenance::FILE_NAME], g.force)?;
    let opts = DatasetOptions { write_clean: clean, exec: Exec::default() };
    let manifest = build_dataset(&spec, &spec.identity_ids(), out, opts)?;
    provenance::write(out, "dataset", &spec, json!({ "clean": clean }))?;
    println!("wrote {} frames of {} identities into {}", manifest.frame_count, manifest.identity_ids.len(), out.display());
    Ok(())
}

pub fn sweep(g: &Global, config: Option<&Path>, out: &Path) -> Result<(), Failure> {
    let path = config.ok_or_else(|| Failure::Usage("sweep needs --config".into()))?;
    let mut spec = provenance::load::<SweepSpec>(path, "sweep")?.config.resolved();
    if let Some(s) = g.seed {
        spec.base.master_seed = s;
    }
    spec.validate()?;
    guard(out, &[provenance::FILE_NAME], g.force)?;
    let report = run_sweep(&spec, Exec::default())?;
    write_report(&report, out, spec.axis.name())?;
    provenance::write(out, "sweep", &spec, json!({}))?;
    println!("{:>12} {:>10} {:>8} {:>8} {:>8}", spec.axis.name(), "estimator", "p50", "p75", "p95");
    for s in &report.summary {
        println!(
            "{:>12} {:>10} {:>8.2} {:>8.2} {:>8.2}",
            s.axis_value.to_string(),
            s.estimator.name(),
            s.mean[0],
            s.mean[1],
            s.mean[2]
        );
    }
    Ok(())
}

pub fn report(g: &Global, paths: &[std::path::PathBuf], out: &Path) -> Result<(), Failure> {
    let reports = paths.iter().map(|p| load_report(p)).collect::<Result<Vec<_>, _>>()?;
    guard(out, &[provenance::FILE_NAME], g.force)?;
    write(&out.join("report.csv"), &to_csv(&reports)?)?;
    for (i, r) in reports.iter().enumerate() {
        let name = r.spec.axis.name();
        let repeated = reports.iter().filter(|o| o.spec.axis == r.spec.axis).count() > 1;
        let stem = if repeated { format!("{name}_{i}") } else { name.to_string() };
        for p in Percentile::ALL {
            write(&out.join(format!("{stem}_{}.svg", p.name())), trend_svg(r, p).as_bytes())?;
        }
    }
    let inputs: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
    provenance::write(out, "report", &json!({ "reports": inputs }), json!({}))?;
    println!("merged {} reports into {}", reports.len(), out.join("report.csv").display());
    Ok(())
}
