use ginnkan::model::ModelKind;
use ginnkan::nn::TrainConfig;
use ginnkan::pinn;

#[test]
#[ignore]
fn lp1_ginn_steps() {
    let p = pinn::get_problem("lp1").unwrap();
    for steps in [3000usize, 10000, 30000] {
        for seed in 0..3u64 {
            let config = TrainConfig { max_steps: steps, seed, ..TrainConfig::default() };
            let t = std::time::Instant::now();
            match pinn::solve(&p, ModelKind::Ginn, &config) {
                Ok(r) => println!(
                    "lp1/ginn steps {steps} seed {seed}: mse {:.3e} ({:.0}s)",
                    r.mse,
                    t.elapsed().as_secs_f64()
                ),
                Err(e) => println!("lp1/ginn steps {steps} seed {seed}: ERR {e}"),
            }
        }
    }
}
