//! Identity-grouped 5-fold cross-validation of the ridge coefficient on the
//! default configuration at desk scale.
//!
//! Usage: `lambda_cv [identities] [slippages]`

use eyetwin::estimator::{block_means, Grid, RidgeStats};
use eyetwin::harness::{frame_plan, identity_model, render_frame, DatasetSpec};
use eyetwin::metrics::{angular_error, percentile};
use eyetwin::optics::Pipeline;
use eyetwin::par::{self, Exec};

const LAMBDAS: [f64; 9] = [1.0, 10.0, 100.0, 1e3, 3e3, 1e4, 3e4, 1e5, 1e6];
const FOLDS: usize = 5;

fn main() -> eyetwin::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let ids: usize = args.get(1).map_or(20, |s| s.parse().expect("identity count"));
    let slips: usize = args.get(2).map_or(4, |s| s.parse().expect("slippage count"));
    let spec = DatasetSpec { identity_count: ids, slippage_per_gaze: slips, ..DatasetSpec::default() };
    let grid = Grid::default();
    let cam = spec.rig.camera(0)?;
    let pipe = Pipeline::new(spec.optics, cam.intrinsics.width, cam.intrinsics.height)?;
    let plan = frame_plan(&spec, &spec.identity_ids())?;
    let feats = par::map_range(plan.len(), Exec::Parallel, |k| {
        let f = &plan[k];
        let img = render_frame(&identity_model(&spec, f.sample.identity_id), f, &spec.rig, 0, Exec::Sequential)?;
        block_means(&pipe.run(&img, f.noise_seed)?, grid)
    })
    .into_iter()
    .collect::<eyetwin::Result<Vec<_>>>()?;

    let fold_of = |id: u64| id as usize % FOLDS;
    let mut stats = vec![RidgeStats::new(grid); FOLDS];
    for (f, x) in plan.iter().zip(&feats) {
        let s = &mut stats[fold_of(f.sample.identity_id)];
        s.push_rows(&[x.as_slice()], &[f.sample.gaze_vec()])?;
        s.tag_identity(f.sample.identity_id);
    }
    println!("{:>10} {:>8} {:>8} {:>8}", "lambda", "p50", "p95", "train50");
    for lambda in LAMBDAS {
        let (mut errs, mut train) = (Vec::new(), Vec::new());
        for fold in 0..FOLDS {
            let mut tr = RidgeStats::new(grid);
            for (_, s) in stats.iter().enumerate().filter(|(j, _)| *j != fold) {
                tr.merge(s)?;
            }
            let model = tr.fit(lambda)?;
            for (f, x) in plan.iter().zip(&feats) {
                let e = model.predict_block_means(x).and_then(|p| angular_error(&p, &f.sample.gaze_vec())).unwrap_or(180.0);
                if fold_of(f.sample.identity_id) == fold { errs.push(e) } else { train.push(e) }
            }
        }
        println!(
            "{lambda:>10} {:>8.2} {:>8.2} {:>8.2}",
            percentile(&errs, 50.0)?,
            percentile(&errs, 95.0)?,
            percentile(&train, 50.0)?
        );
    }
    Ok(())
}
