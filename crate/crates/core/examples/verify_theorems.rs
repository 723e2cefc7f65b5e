//! Runs every randomized verification suite at its acceptance size and
//! prints one summary line per suite.
//!
//!     cargo run --release --example verify_theorems -- [seed]

use std::time::Instant;

use ausam::verify::{
    lemma1_suite, theorem1_suite, theorem2_suite, theorem3_suite, theorem4_suite,
};

fn main() -> ausam::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);

    let t = Instant::now();
    let r = theorem1_suite(200, seed)?;
    let literal = r.iter().filter(|x| x.bound.holds).count();
    let normalized = r.iter().filter(|x| x.mean_normalized_holds).count();
    let worst = r.iter().map(|x| x.bound.lhs / x.bound.rhs).fold(0.0, f64::max);
    println!(
        "thm1    literal {literal}/200, mean-normalized {normalized}/200, worst lhs/rhs {worst:.3} ({:.1?})",
        t.elapsed()
    );

    let t = Instant::now();
    let r = lemma1_suite(100, seed)?;
    let ok = r.iter().filter(|c| c.holds).count();
    let redraws: usize = r.iter().map(|c| c.attempts - 1).sum();
    let (lo, hi) = r
        .iter()
        .flat_map(|c| c.scaling.ratios.iter().copied())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let quad_dev = r
        .iter()
        .filter(|c| c.kind == ausam::verify::InstanceKind::Quadratic)
        .flat_map(|c| c.scaling.ratios.iter().map(|x| (x - 0.5).abs()))
        .fold(0.0, f64::max);
    println!("lemma1  quadratic max |ratio - 0.5| = {quad_dev:.2e}");
    println!("lemma1  {ok}/100 in range, ratios [{lo:.6}, {hi:.6}], {redraws} redraws ({:.1?})", t.elapsed());

    let t = Instant::now();
    let r = theorem2_suite(50, seed)?;
    let ok = r.iter().filter(|x| x.bound.holds).count();
    let tightest = r
        .iter()
        .filter(|x| x.bound.rhs > 0.0)
        .map(|x| x.bound.lhs / x.bound.rhs)
        .fold(0.0, f64::max);
    println!("thm2    {ok}/50, max lhs/rhs {tightest:.2e} ({:.1?})", t.elapsed());

    let t = Instant::now();
    let r = theorem3_suite(20, seed)?;
    let ok = r.iter().filter(|x| x.holds).count();
    println!("thm3    {ok}/20 running means non-increasing ({:.1?})", t.elapsed());

    let t = Instant::now();
    let r = theorem4_suite(50, seed)?;
    let ok = r.iter().filter(|x| x.bound.holds).count();
    println!(
        "thm4    {ok}/50, p≡1 instance lhs={} rhs={} ({:.1?})",
        r[0].bound.lhs,
        r[0].bound.rhs,
        t.elapsed()
    );
    Ok(())
}
