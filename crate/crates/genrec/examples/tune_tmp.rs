use genrec::generator::{backward, backward_latent, forward, Architecture, Weights};
use genrec::{SeededRng, Tensor};
use std::time::Instant;

fn main() {
    let arch = Architecture::rgb_small();
    let mut rng = SeededRng::new(42);
    let weights = Weights::random(&arch, &mut rng);
    let z: Vec<f64> = (0..arch.latent_dim).map(|_| rng.next_normal()).collect();
    let n = 64 * 64 * 3;
    let reps = 20;

    let t0 = Instant::now();
    let mut tape_keep = None;
    for _ in 0..reps {
        let (_, tape) = forward(&weights, &z).unwrap();
        tape_keep = Some(tape);
    }
    let t_fwd = t0.elapsed();
    let tape = tape_keep.unwrap();
    let d_img = Tensor::new(vec![3, 64, 64], (0..n).map(|_| rng.next_normal() * 0.01).collect()).unwrap();
    let t1 = Instant::now();
    for _ in 0..reps { let _ = backward(&weights, &tape, &d_img).unwrap(); }
    let t_bwd = t1.elapsed();
    let t2 = Instant::now();
    for _ in 0..reps { let _ = backward_latent(&weights, &tape, &d_img).unwrap(); }
    let t_bwd_z = t2.elapsed();
    println!("per call: fwd {:?}  bwd {:?}  bwd_z {:?}", t_fwd / reps, t_bwd / reps, t_bwd_z / reps);
}
