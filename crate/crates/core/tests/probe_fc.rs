use ginnkan::model::{AnyModel, FC_HIDDEN_LAYERS, FC_WIDTH};
use ginnkan::nn::{FcModel, TrainConfig, Trainer};
use ginnkan::pinn::{get_problem, sample_collocation, pde_loss_terms, N_COLLOCATION};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn raw_fc(pde: &str, steps: usize, seed: u64) {
    let p = get_problem(pde).unwrap();
    let config = TrainConfig { max_steps: steps, seed, ..TrainConfig::default() };
    let colloc = sample_collocation(&p, N_COLLOCATION, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // no fit_normalizer: raw inputs
    let mut model = AnyModel::Fc(FcModel::new(2, FC_HIDDEN_LAYERS, FC_WIDTH, &mut rng));
    let trainer = Trainer::new(config.clone());
    let start = std::time::Instant::now();
    let log = trainer.run(&mut model, &mut |m| {
        pde_loss_terms(m, &p, &colloc, config.ic_weight, config.bc_weight)
    });
    match log {
        Ok(log) => {
            let pred = ginnkan::nn::predict(&model, &[colloc.x.clone(), colloc.t.clone()]).unwrap();
            let truth: Vec<f64> = colloc.x.iter().zip(&colloc.t).map(|(&x, &t)| (p.solution)(x, t)).collect();
            let mse = ginnkan::nn::mse(&pred, &truth).unwrap();
            let h = &log.loss_history;
            let probe: Vec<String> = (0..=4).map(|i| format!("{:.2e}", h[(h.len() - 1) * i / 4])).collect();
            println!("rawfc {pde} seed {seed} {steps} steps {:.0}s: mse {mse:.3e} loss[{}]", start.elapsed().as_secs_f64(), probe.join(" "));
        }
        Err(e) => println!("rawfc {pde} seed {seed}: FAILED {e}"),
    }
}

#[test]
#[ignore]
fn fcprobe() {
    raw_fc("lp3", 1500, 0);
    raw_fc("convection2", 1200, 0);
    raw_fc("wave", 1000, 0);
}
