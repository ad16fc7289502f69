//! End-to-end acceptance run. Prints one `[PASS]`/`[FAIL]` line per criterion
//! and exits non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use reflectolab_core::corpus;
use reflectolab_core::counter_machine::{Configuration, CounterMachine};
use reflectolab_core::exact_num::{frac, int, Rational, RationalMatrix};
use reflectolab_core::fluid_sim::{resolve_rates, simulate, validate_trace, SimOptions, Status, Trace, DEFAULT_ZSET_CAP};
use reflectolab_core::matrix_props::{check_certificate, default_certificate, is_completely_s, CompletelySVerdict};
use reflectolab_core::reduction::{apply_halting_modification, reduce, Group, SkorokhodInstance};
use reflectolab_core::verify::{
    check_interval_lemmas, semi_decide_stability, verify_encoding, Limits, Outcome, StabilityVerdict, A_CYCLE,
};

type Verdict = Result<String, String>;

/// Traces produced by earlier criteria, revalidated by the trace criterion.
#[derive(Default)]
struct Collected {
    traces: Vec<(String, SkorokhodInstance, Trace)>,
}

impl Collected {
    fn keep(&mut self, name: &str, inst: &SkorokhodInstance, trace: Option<&Trace>) {
        if let Some(t) = trace {
            self.traces.push((name.to_string(), inst.clone(), t.clone()));
        }
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn encoding(seen: &mut Collected) -> Verdict {
    let limits = Limits::default();
    let mut total = 0;
    for name in ["loop", "countdown", "transfer"] {
        let e = corpus::get(name).unwrap();
        let out = verify_encoding(&e.machine, e.initial, 50, &limits).map_err(|err| format!("{name}: {err}"))?;
        ensure(out.report.outcome() == Outcome::Pass, || format!("{name}: {}", out.report.summary))?;
        total += out.report.checks.len();
        seen.keep(name, &out.instance, out.trace.as_ref());
    }
    Ok(format!("z(5t) matches the encoded configuration, {total} checks over 3 machines"))
}

fn interval_lemmas(seen: &mut Collected) -> Verdict {
    let e = corpus::get("countdown").unwrap();
    let mut total = 0;
    for step in 0..3 {
        let out = check_interval_lemmas(&e.machine, e.initial, step, &Limits::default()).map_err(|err| err.to_string())?;
        ensure(out.report.outcome() == Outcome::Pass, || format!("t={step}: {}", out.report.summary))?;
        total += out.report.checks.len();
        seen.keep(&format!("countdown cycle {step}"), &out.instance, out.trace.as_ref());
    }
    Ok(format!("{total} interval checks for t = 0, 1, 2"))
}

fn stability(seen: &mut Collected) -> Verdict {
    let limits = Limits::default();
    let e = corpus::get("countdown_aug").unwrap();
    let run = semi_decide_stability(&e.machine, e.initial, 20, &limits).map_err(|err| err.to_string())?;
    let expected = StabilityVerdict::HaltsAndStabilizes { steps: 5, t_zero: int(26) };
    ensure(run.verdict == expected, || format!("countdown_aug: {}", run.verdict))?;
    ensure(run.checked.report.outcome() == Outcome::Pass, || run.checked.report.summary.clone())?;
    seen.keep("countdown_aug modified", &run.checked.instance, run.checked.trace.as_ref());

    let e = corpus::get("loop").unwrap();
    let run = semi_decide_stability(&e.machine, e.initial, 100, &limits).map_err(|err| err.to_string())?;
    ensure(run.verdict == StabilityVerdict::NoZeroWithinBudget { budget: 100 }, || format!("loop: {}", run.verdict))?;
    ensure(run.checked.report.outcome() == Outcome::Pass, || run.checked.report.summary.clone())?;
    let horizon = run.checked.trace.as_ref().map(|t| t.status.time().clone());
    ensure(horizon.as_ref().is_some_and(|t| *t >= int(500)), || format!("loop horizon {horizon:?}"))?;
    seen.keep("loop modified", &run.checked.instance, run.checked.trace.as_ref());
    Ok("countdown_aug at the origin from t=26; loop has no zero state up to t=501".into())
}

/// `m` states, each looping on itself.
fn self_loops(m: usize) -> CounterMachine {
    (1..=m).fold(CounterMachine::new(m, m), |cm, s| cm.with_all(s, s, [0, 0]))
}

/// Reduction of `self_loops(m)` with the halting modification applied.
fn modified_self_loops(m: usize) -> Result<SkorokhodInstance, String> {
    let inst = reduce(&self_loops(m), &Configuration::new(1, 0, 0)).map_err(|e| e.to_string())?;
    apply_halting_modification(&inst, m).map_err(|e| e.to_string())
}

fn certificates() -> Verdict {
    let mut mins = Vec::new();
    for m in 1..=5 {
        let inst = modified_self_loops(m)?;
        let layout = inst.layout.unwrap();
        let v = default_certificate(m).map_err(|e| e.to_string())?;
        let report = check_certificate(&inst.r, &v).map_err(|e| e.to_string())?;
        ensure(report.passes(), || format!("m={m}: certificate fails"))?;
        if m == 1 {
            for g in Group::ALL {
                mins.push(format!("{}={}", g.name(), report.min_over(layout.range(g)).unwrap()));
            }
        }
    }
    let inst = modified_self_loops(1)?;
    let start = Instant::now();
    let verdict = is_completely_s(&inst.r, inst.dim()).map_err(|e| e.to_string())?;
    ensure(verdict == CompletelySVerdict::Yes, || format!("m=1 brute force: {verdict:?}"))?;
    Ok(format!(
        "certificate passes on modified matrices for m=1..5 (m=1 row minima {}); brute force agrees at d=18 in {:.1}s",
        mins.join(" "),
        start.elapsed().as_secs_f64()
    ))
}

fn traces_valid(seen: &Collected) -> Verdict {
    for (name, inst, trace) in &seen.traces {
        let report = validate_trace(inst, trace);
        ensure(report.is_clean(), || format!("{name}: {:?}", report.violations.first()))?;
    }
    let segments: usize = seen.traces.iter().map(|(_, _, t)| t.segments.len()).sum();
    ensure(seen.traces.len() >= 8, || format!("only {} traces collected", seen.traces.len()))?;
    Ok(format!("{} traces, {segments} segments, no violations", seen.traces.len()))
}

fn big(x: &Rational) -> BigRational {
    BigRational::new(x.numer().clone(), x.denom().clone())
}

/// All complementary rate vectors, by exhaustive support enumeration with
/// Gauss-Jordan elimination. Returns `None` when a principal block is singular.
fn lcp_oracle(r: &[Vec<i64>], theta: &[i64], zero: &[bool]) -> Option<BTreeSet<Vec<BigRational>>> {
    let d = theta.len();
    let q = |v: i64| BigRational::from_integer(BigInt::from(v));
    let zs: Vec<usize> = (0..d).filter(|&j| zero[j]).collect();
    let mut out = BTreeSet::new();
    for mask in 0u32..1 << zs.len() {
        let s: Vec<usize> = (0..zs.len()).filter(|&b| mask >> b & 1 == 1).map(|b| zs[b]).collect();
        let k = s.len();
        let mut a: Vec<Vec<BigRational>> =
            s.iter().map(|&i| s.iter().map(|&j| q(r[i][j])).chain([q(-theta[i])]).collect()).collect();
        for col in 0..k {
            let pivot = (col..k).find(|&row| !a[row][col].is_zero())?;
            a.swap(col, pivot);
            let p = a[col][col].clone();
            for x in a[col].iter_mut() {
                *x = &*x / &p;
            }
            for row in 0..k {
                if row != col && !a[row][col].is_zero() {
                    let f = a[row][col].clone();
                    let pivot_row = a[col].clone();
                    for (x, y) in a[row].iter_mut().zip(&pivot_row) {
                        *x = &*x - &f * y;
                    }
                }
            }
        }
        let mut u = vec![BigRational::zero(); d];
        for (row, &j) in s.iter().enumerate() {
            u[j] = a[row][k].clone();
        }
        let w: Vec<BigRational> =
            (0..d).map(|i| q(theta[i]) + (0..d).map(|j| q(r[i][j]) * &u[j]).sum::<BigRational>()).collect();
        let feasible = u.iter().all(|x| !x.is_negative())
            && zs.iter().all(|&i| !w[i].is_negative())
            && (0..d).all(|i| u[i].is_zero() || w[i].is_zero());
        if feasible {
            out.insert(w);
        }
    }
    Some(out)
}

fn closed_form_1d() -> Result<(), String> {
    for (z0, th, r) in [(frac(7, 2), int(-1), int(1)), (int(2), frac(-3, 4), int(2)), (int(1), frac(1, 3), int(5))] {
        let inst = SkorokhodInstance::new(vec![z0.clone()], vec![th.clone()], RationalMatrix::from_rows(vec![vec![r]]).unwrap())
            .map_err(|e| e.to_string())?;
        let trace = simulate(&inst, &SimOptions::until(int(10))).map_err(|e| e.to_string())?;
        for k in 0..=40 {
            let t = frac(k, 4);
            let free = &z0 + &(&th * &t);
            let expected = if free.is_negative() { int(0) } else { free };
            let got = trace.state_at(&t).map(|z| z[0].clone());
            ensure(got.as_ref() == Some(&expected), || format!("1-D z0={z0} theta={th}: z({t}) = {got:?}, expected {expected}"))?;
        }
    }
    Ok(())
}

fn scaling() -> Result<(), String> {
    let e = corpus::get("transfer").unwrap();
    let inst = reduce(&e.machine, &e.initial).map_err(|e| e.to_string())?;
    let horizon = int(20);
    let base = simulate(&inst, &SimOptions::until(horizon.clone())).map_err(|e| e.to_string())?;
    for lambda in [frac(1, 3), int(2), frac(7, 2)] {
        let z0: Vec<Rational> = inst.z0.iter().map(|x| x * &lambda).collect();
        let scaled_inst = inst.with_start(z0).map_err(|e| e.to_string())?;
        let scaled = simulate(&scaled_inst, &SimOptions::until(&horizon * &lambda)).map_err(|e| e.to_string())?;
        ensure(scaled.segments.len() == base.segments.len(), || format!("lambda={lambda}: segment count differs"))?;
        for t in base.breakpoints().iter().chain([&frac(37, 7)]) {
            let want: Vec<Rational> = base.state_at(t).unwrap().iter().map(|x| x * &lambda).collect();
            let got = scaled.state_at(&(t * &lambda));
            ensure(got.as_ref() == Some(&want), || format!("lambda={lambda}: state at {t} not scaled"))?;
        }
    }
    Ok(())
}

fn random_lcp() -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut tested = 0;
    let mut multi = 0;
    while tested < 200 {
        let d = rng.gen_range(1..=6);
        let r: Vec<Vec<i64>> = (0..d).map(|_| (0..d).map(|_| rng.gen_range(-3..=3)).collect()).collect();
        let theta: Vec<i64> = (0..d).map(|_| rng.gen_range(-3..=2)).collect();
        let zero: Vec<bool> = (0..d).map(|_| rng.gen_bool(0.6)).collect();
        let Some(expected) = lcp_oracle(&r, &theta, &zero) else {
            continue;
        };
        tested += 1;
        let rm = RationalMatrix::from_i64_rows(&r.iter().map(Vec::as_slice).collect::<Vec<_>>()).unwrap();
        let th: Vec<Rational> = theta.iter().map(|&v| int(v)).collect();
        let z: Vec<Rational> = (0..d).map(|j| if zero[j] { int(0) } else { int(j as i64 + 1) }).collect();
        let sols = resolve_rates(&rm, &th, &z, DEFAULT_ZSET_CAP).map_err(|e| e.to_string())?;
        let got: BTreeSet<Vec<BigRational>> = sols.iter().map(|s| s.w.iter().map(big).collect()).collect();
        ensure(got == expected, || format!("R={r:?} theta={theta:?} zero={zero:?}: {} vs {} solutions", got.len(), expected.len()))?;
        multi += usize::from(expected.len() > 1);
    }
    Ok(multi)
}

fn simulator_oracles() -> Verdict {
    closed_form_1d()?;
    scaling()?;
    let multi = random_lcp()?;
    Ok(format!("1-D closed form, scaling by 1/3, 2, 7/2, and 200 random LCPs ({multi} with several solutions)"))
}

fn a_cycle() -> Verdict {
    let e = corpus::get("countdown").unwrap();
    let inst = reduce(&e.machine, &e.initial).map_err(|e| e.to_string())?;
    let layout = inst.layout.unwrap();
    let trace = simulate(&inst, &SimOptions::until(int(40))).map_err(|e| e.to_string())?;
    ensure(matches!(trace.status, Status::BudgetExhausted { .. }), || trace.status.to_string())?;
    let a = layout.range(Group::A);
    for k in (0..25i64).chain(13..38) {
        let z = trace.state_at(&int(k)).ok_or_else(|| format!("no state at {k}"))?;
        let want: Vec<Rational> = A_CYCLE[(k % 5) as usize].iter().map(|&v| int(v)).collect();
        ensure(z[a.clone()] == want[..], || format!("z_A({k}) wrong"))?;
        let mid = &int(k) + &frac(1, 2);
        let seg = trace.segments.iter().find(|s| s.contains(&mid)).ok_or_else(|| format!("no segment at {mid}"))?;
        let pushing = layout.index(Group::A, (k % 5) as usize + 1);
        for j in a.clone() {
            let rate = if j == pushing { int(1) } else { int(0) };
            ensure(seg.ydot[j] == rate, || format!("y_A{} rate {} on ({k},{})", j + 1, seg.ydot[j], k + 1))?;
        }
    }
    Ok("z_A follows the 5-cycle with one unit push per interval over [0,25] and [13,38]".into())
}

fn main() -> ExitCode {
    let mut seen = Collected::default();
    let results: Vec<(&str, Verdict)> = vec![
        ("encoding at multiples of five", encoding(&mut seen)),
        ("interval lemmas", interval_lemmas(&mut seen)),
        ("stability bridge", stability(&mut seen)),
        ("completely-S certificate", certificates()),
        ("trace validity", traces_valid(&seen)),
        ("simulator oracles", simulator_oracles()),
        ("A-cycle", a_cycle()),
    ];
    let mut failed = 0;
    for (k, (name, verdict)) in results.iter().enumerate() {
        match verdict {
            Ok(detail) => println!("[PASS] {}. {name}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {}. {name}: {why}", k + 1);
            }
        }
    }
    println!("{} of {} criteria pass", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
