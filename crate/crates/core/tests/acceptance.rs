//! Exit-gate checks, run as a plain binary so that every criterion prints
//! one `criterion N: PASS|FAIL` line regardless of output capture.

use imc_sha3::accelerator::{Accelerator, Banks, CycleTrace, OpKind};
use imc_sha3::cli::verify_text;
use imc_sha3::config::{Backend, SimConfig};
use imc_sha3::device::{self, MemristorState};
use imc_sha3::gates::{self, GateKind, DRIFT_LIMIT};
use imc_sha3::keccak::{self, KeccakState, Variant};
use imc_sha3::metrics::{self, AreaModel, EnergyLedger, EnergyRow};
use proptest::collection::vec;
use proptest::prelude::*;
use proptest::test_runner::TestRunner;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Bit-level permutation steps written straight from their definitions on
/// a[x][y][z], with rotation offsets and round constants generated rather
/// than tabulated.
#[allow(clippy::needless_range_loop)]
mod oracle {
    use imc_sha3::keccak::KeccakState;

    pub type Bits = [[[bool; 64]; 5]; 5];

    pub fn bits(s: &KeccakState) -> Bits {
        let mut a = [[[false; 64]; 5]; 5];
        for x in 0..5 {
            for y in 0..5 {
                for z in 0..64 {
                    a[x][y][z] = s.0[x + 5 * y] >> z & 1 == 1;
                }
            }
        }
        a
    }

    pub fn state(a: &Bits) -> KeccakState {
        let mut s = KeccakState::zero();
        for x in 0..5 {
            for y in 0..5 {
                for z in 0..64 {
                    s.0[x + 5 * y] |= (a[x][y][z] as u64) << z;
                }
            }
        }
        s
    }

    pub fn theta(a: &Bits) -> Bits {
        let mut c = [[false; 64]; 5];
        for x in 0..5 {
            for z in 0..64 {
                c[x][z] = (0..5).fold(false, |p, y| p ^ a[x][y][z]);
            }
        }
        let mut out = *a;
        for x in 0..5 {
            for z in 0..64 {
                let d = c[(x + 4) % 5][z] ^ c[(x + 1) % 5][(z + 63) % 64];
                for y in 0..5 {
                    out[x][y][z] ^= d;
                }
            }
        }
        out
    }

    pub fn rho(a: &Bits) -> Bits {
        let mut out = *a;
        let (mut x, mut y) = (1, 0);
        for t in 0..24 {
            let off = (t + 1) * (t + 2) / 2;
            for z in 0..64 {
                out[x][y][z] = a[x][y][(z + 64 * 5 - off % 64) % 64];
            }
            (x, y) = (y, (2 * x + 3 * y) % 5);
        }
        out
    }

    pub fn pi(a: &Bits) -> Bits {
        let mut out = *a;
        for x in 0..5 {
            for y in 0..5 {
                out[x][y] = a[(x + 3 * y) % 5][x];
            }
        }
        out
    }

    pub fn chi(a: &Bits) -> Bits {
        let mut out = *a;
        for x in 0..5 {
            for y in 0..5 {
                for z in 0..64 {
                    out[x][y][z] = a[x][y][z] ^ (!a[(x + 1) % 5][y][z] & a[(x + 2) % 5][y][z]);
                }
            }
        }
        out
    }

    fn rc_bit(t: usize) -> bool {
        if t.is_multiple_of(255) {
            return true;
        }
        let mut r = [true, false, false, false, false, false, false, false];
        for _ in 1..=t % 255 {
            let mut n = [false; 9];
            n[1..].copy_from_slice(&r);
            n[0] ^= n[8];
            n[4] ^= n[8];
            n[5] ^= n[8];
            n[6] ^= n[8];
            r.copy_from_slice(&n[..8]);
        }
        r[0]
    }

    /// Round index `ir` counts from 0.
    pub fn iota(a: &Bits, ir: usize) -> Bits {
        let mut out = *a;
        for j in 0..=6 {
            out[0][0][(1 << j) - 1] ^= rc_bit(j + 7 * ir);
        }
        out
    }
}

/// Collects failure descriptions for one criterion.
struct Criterion {
    n: u8,
    failures: Vec<String>,
}

impl Criterion {
    fn new(n: u8) -> Self {
        Criterion {
            n,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn finish(self) -> bool {
        let ok = self.failures.is_empty();
        println!("criterion {}: {}", self.n, if ok { "PASS" } else { "FAIL" });
        for f in &self.failures {
            println!("  {f}");
        }
        ok
    }
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    })
}

fn random_state(rng: &mut ChaCha8Rng) -> KeccakState {
    let mut s = KeccakState::zero();
    for l in s.0.iter_mut() {
        *l = rng.gen();
    }
    s
}

fn trace() -> CycleTrace {
    CycleTrace::new(SimConfig::default().control_bits.per_cycle())
}

fn criterion_1_digest_correctness() -> Criterion {
    let mut c = Criterion::new(1);
    let acc = Accelerator::new(SimConfig::default()).unwrap();
    for (name, text, variant) in [
        (
            "SHA3-256",
            include_str!("data/ShortMsgKAT_SHA3-256.txt"),
            Variant::Sha3_256,
        ),
        (
            "SHA3-512",
            include_str!("data/ShortMsgKAT_SHA3-512.txt"),
            Variant::Sha3_512,
        ),
    ] {
        let report = verify_text(&acc, text, None, name).unwrap();
        c.check(report.records >= 256, || {
            format!("{name}: only {} records parsed", report.records)
        });
        c.check(report.all_passed(), || {
            format!("{name}: {:?} {:?}", report.failures, report.malformed)
        });
        // Records must actually be of this variant, not merely self-consistent.
        let kat = imc_sha3::vectors::parse_kat(text);
        c.check(
            kat.records
                .iter()
                .all(|r| r.md.len() == variant.digest_bytes()),
            || format!("{name}: digest length differs from {variant}"),
        );
    }

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..64 {
        let len = rng.gen_range(0..600);
        let msg: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
        for v in [Variant::Sha3_256, Variant::Sha3_512] {
            let (d, report) = acc.hash_with(&msg, v).unwrap();
            c.check(
                d == keccak::sha3_digest(&msg, v) && report.matches_reference,
                || format!("{v} random message of {len} bytes"),
            );
        }
    }
    let acc_ref = &acc;
    let r = runner(48).run(&vec(any::<u8>(), 0..400), |msg| {
        for v in [Variant::Sha3_256, Variant::Sha3_512] {
            prop_assert_eq!(
                acc_ref.hash_with(&msg, v).unwrap().0,
                keccak::sha3_digest(&msg, v)
            );
        }
        Ok(())
    });
    c.check(r.is_ok(), || format!("property run: {r:?}"));
    c
}

fn criterion_2_cycle_accounting() -> Criterion {
    let mut c = Criterion::new(2);
    let acc = Accelerator::new(SimConfig::default()).unwrap();
    let (_, t) = acc.run_block(Variant::Sha3_256, &[0x3c; 136]).unwrap();
    c.check(t.total_cycles() == 6326, || {
        format!("block total {} != 6326", t.total_cycles())
    });
    for round in 1..=24u8 {
        let n = t.cycles_in_round(0, round);
        c.check(n == 263, || format!("round {round}: {n} cycles"));
    }
    let expect = [
        (OpKind::Init, 2),
        (OpKind::Map, 12),
        (OpKind::Theta, 175 * 24),
        (OpKind::RhoInit, 24),
        (OpKind::Rho, 5 * 24),
        (OpKind::StateInit, 2 * 24),
        (OpKind::Pi, 25 * 24),
        (OpKind::Complement, 5 * 24),
        (OpKind::Chi, 45 * 24),
        (OpKind::Iota, 5 * 24),
    ];
    for (op, want) in expect {
        let got = t.cycles_of(op);
        c.check(got == want, || format!("{op}: {got} cycles, want {want}"));
    }
    let per_round = t.round_breakdown(0, 7);
    for (op, want) in [
        (OpKind::Theta, 175),
        (OpKind::Rho, 5),
        (OpKind::RhoInit, 1),
        (OpKind::Pi, 25),
        (OpKind::Chi, 45),
        (OpKind::Complement, 5),
        (OpKind::Iota, 5),
    ] {
        c.check(per_round.get(&op) == Some(&want), || {
            format!("round 7 {op}: {:?}", per_round.get(&op))
        });
    }
    let (_, t512) = acc.run_block(Variant::Sha3_512, &[0; 72]).unwrap();
    c.check(t512.cycles_of(OpKind::Map) == 6, || {
        "SHA3-512 mapping is not 6 cycles".into()
    });
    c
}

fn criterion_3_operation_equivalence() -> Criterion {
    let mut c = Criterion::new(3);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..1000 {
        let s = random_state(&mut rng);
        let bits = oracle::bits(&s);

        let mut b = Banks::loaded(s);
        let mut t = trace();
        b.exec_theta(&mut t).unwrap();
        let theta = oracle::state(&oracle::theta(&bits));
        c.check(*b.na() == theta, || format!("theta, state {i}"));

        b.exec_rho(&mut t).unwrap();
        let rho = oracle::state(&oracle::rho(&oracle::bits(b.na())));
        c.check(*b.rho() == rho, || format!("rho, state {i}"));

        b.exec_pi(&mut t).unwrap();
        let pi = oracle::state(&oracle::pi(&oracle::bits(&rho)));
        c.check(*b.a() == pi, || format!("pi, state {i}"));

        b.exec_complement(&mut t).unwrap();
        c.check(b.is_consistent(), || format!("complement, state {i}"));

        let mut b = Banks::loaded(s);
        b.exec_chi(&mut t).unwrap();
        c.check(*b.a() == oracle::state(&oracle::chi(&bits)), || {
            format!("chi, state {i}")
        });
        c.check(b.is_consistent(), || format!("chi complement, state {i}"));

        let round = 1 + i % 24;
        let mut b = Banks::loaded(s);
        b.exec_iota(round, &mut t).unwrap();
        c.check(
            *b.a() == oracle::state(&oracle::iota(&bits, round - 1)),
            || format!("iota round {round}, state {i}"),
        );

        if i < 200 {
            let mut b = Banks::loaded(s);
            b.exec_round(round, &mut t).unwrap();
            let want = oracle::iota(
                &oracle::chi(&oracle::pi(&oracle::rho(&oracle::theta(&bits)))),
                round - 1,
            );
            c.check(*b.a() == oracle::state(&want), || {
                format!("round {round}, state {i}")
            });
        }
    }

    // Every 5-bit row pattern, placed at each z in every plane.
    for pattern in 0u32..32 {
        let mut s = KeccakState::zero();
        for y in 0..5 {
            for x in 0..5 {
                if pattern >> x & 1 == 1 {
                    s.0[x + 5 * y] = u64::MAX;
                }
            }
        }
        let mut b = Banks::loaded(s);
        b.exec_chi(&mut trace()).unwrap();
        for x in 0..5 {
            let bit = |k: usize| pattern >> (k % 5) & 1 == 1;
            let want = bit(x) ^ (!bit(x + 1) & bit(x + 2));
            for y in 0..5 {
                let lane = b.a().0[x + 5 * y];
                c.check(lane == if want { u64::MAX } else { 0 }, || {
                    format!("chi row {pattern:05b}, x={x}, y={y}")
                });
            }
        }
    }
    c
}

fn criterion_4_gate_validation() -> Criterion {
    let mut c = Criterion::new(4);
    let config = SimConfig::default();
    let e = config.electrical();
    let reports = gates::validate_all(&e, 4).unwrap();
    for kind in GateKind::ALL {
        c.check(reports.iter().any(|r| r.kind == kind), || {
            format!("{} not validated", kind.name())
        });
    }
    for r in &reports {
        let name = r.kind.name();
        let want_domain = if r.kind == GateKind::VolistorXorMulti {
            256
        } else {
            4
        };
        c.check(r.domain == want_domain, || {
            format!("{name}: domain {}", r.domain)
        });
        c.check(r.mismatches == 0, || {
            format!("{name}: {} mismatches", r.mismatches)
        });
        c.check(r.max_read_drift < DRIFT_LIMIT, || {
            format!("{name}: read drift {:e}", r.max_read_drift)
        });
        c.check(
            r.max_reverse_current <= e.v_plus / e.params.r_off * (1.0 + 1e-9),
            || format!("{name}: reverse current {:e}", r.max_reverse_current),
        );
        c.check(r.passed, || format!("{name}: report not passed"));
    }
    c
}

fn criterion_5_accounting_formulas() -> Criterion {
    let mut c = Criterion::new(5);
    let config = SimConfig::default();
    let acc = Accelerator::new(config.clone()).unwrap();
    let (_, t) = acc.run_block(Variant::Sha3_256, &[0; 136]).unwrap();
    let cs = metrics::control_storage(&t, config.area.bytes_per_kb);
    c.check(cs.bits == 178 * 6326, || {
        format!("control bits {}", cs.bits)
    });
    c.check((cs.kb - 140.754).abs() <= 0.01, || {
        format!("control storage {} KB", cs.kb)
    });

    let per_cycle = u64::from(config.control_bits.per_cycle());
    c.check(per_cycle == 178, || {
        format!("{per_cycle} control bits per cycle")
    });
    c.check(per_cycle * 13 == 2314, || {
        format!("13-cycle mapping: {} bits", per_cycle * 13)
    });
    let map = metrics::control_storage(&t.filter(OpKind::Map), config.area.bytes_per_kb);
    c.check(map.bits == per_cycle * map.cycles, || {
        "mapping bits not cycles x per-cycle".into()
    });

    let area = AreaModel::new(&config);
    c.check(area.crossbar_bits() == 9536, || {
        format!("crossbar bits {}", area.crossbar_bits())
    });
    for (what, got, want) in [
        ("crossbar", area.crossbar_kb(), 1.192),
        ("gates and routing", area.gates_and_routing_kb(), 0.304),
        ("total", area.total_kb(), 1.496),
    ] {
        c.check((got - want).abs() < 1e-12, || {
            format!("{what} area {got} KB")
        });
    }

    let tp = metrics::throughput(1088.0, t.total_cycles() as f64, config.frequency_hz).unwrap();
    c.check((tp / 1e6 - 171.99).abs() < 0.005, || {
        format!("throughput {} Mbps", tp / 1e6)
    });
    c.check((tp / 0.1727e9 - 1.0).abs() < 0.01, || {
        format!("throughput {tp} vs 0.1727 Gbps")
    });
    c
}

fn criterion_6_energy() -> Criterion {
    let mut c = Criterion::new(6);
    let config = SimConfig {
        backend: Backend::LogicalAnalog,
        ..SimConfig::default()
    };
    let acc = Accelerator::new(config.clone()).unwrap();
    let reference = EnergyLedger::reference(&config.energy_reference);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let random: Vec<u8> = (0..100).map(|_| rng.gen()).collect();
    for msg in [b"abc".to_vec(), random] {
        let (_, run) = acc.hash_message(&msg).unwrap();
        let analog = run.analog.as_ref().expect("analog report");
        c.check(analog.equivalent(), || {
            "analog replay disagrees with the logical backend".into()
        });
        let ledger = EnergyLedger::from_analog(analog).unwrap();
        for row in EnergyRow::ALL {
            c.check(ledger.get(row) > 0.0, || {
                format!("{} energy not positive", row.name())
            });
        }
        c.check(ledger.ordering_holds(), || {
            format!("row ordering violated:\n{}", ledger.to_csv(None))
        });
        let (total, want) = (ledger.total(), reference.total());
        c.check(total >= want / 10.0 && total <= want * 10.0, || {
            format!("total {total} pJ vs {want} pJ")
        });
        let share = ledger.initialization_share().unwrap_or(f64::NAN);
        println!(
            "  energy {total:.3} pJ (reference {want:.3}); initialization share {:.1}% (reference {:.0}%)",
            100.0 * share,
            100.0 * config.energy_reference.initialization_share_of_computation
        );
    }
    c
}

fn criterion_7_device_model() -> Criterion {
    let mut c = Criterion::new(7);
    let p = SimConfig::default().device;
    p.validate().unwrap();

    // Dead zone: no motion strictly between the thresholds.
    for k in 0..=100 {
        let v = p.v_open + (p.v_closed - p.v_open) * (k as f64 / 100.0);
        if v > p.v_open && v < p.v_closed {
            let s = device::step_state(&p, MemristorState::new(0.37), v, 1e-6);
            c.check(s.w() == 0.37, || format!("state moved at {v} V"));
        }
    }
    // Clamping at both ends.
    let up = device::step_state(&p, MemristorState::LRS, 1.2, 1e-6);
    let down = device::step_state(&p, MemristorState::HRS, -1.2, 1e-6);
    c.check(up.w() == 1.0 && down.w() == 0.0, || {
        format!("clamp: {} {}", up.w(), down.w())
    });

    // Full SET in 1 ns at V_SET, and not noticeably sooner.
    let t_set = p.full_switch_time(1.2).unwrap();
    c.check((t_set - 1e-9).abs() < 1e-12, || {
        format!("full switch time {t_set:e} s")
    });
    let mut s = MemristorState::HRS;
    for _ in 0..100 {
        s = device::step_state(&p, s, 1.2, 1e-11);
    }
    c.check(s.w() > 1.0 - 1e-9, || format!("w after 1 ns = {}", s.w()));
    let half = device::step_state(&p, MemristorState::HRS, 1.2, 0.5e-9);
    c.check((half.w() - 0.5).abs() < 1e-9, || {
        format!("w after 0.5 ns = {}", half.w())
    });

    // Rectification: reverse current bounded by |v| / r_off in either state.
    let wave = device::sinusoid(1.2, 1e8, 1e-11, 2000);
    let sweep = device::iv_sweep(&p, MemristorState::LRS, &wave, 1e-11);
    for smp in &sweep {
        if smp.v < 0.0 {
            c.check(smp.i.abs() <= smp.v.abs() / p.r_off * (1.0 + 1e-12), || {
                format!("reverse i at t={:e}", smp.t)
            });
        }
    }
    let forward_max = sweep.iter().map(|s| s.i).fold(0.0, f64::max);
    c.check(forward_max > 1.2 / p.r_off * 100.0, || {
        "no forward conduction".into()
    });
    let still = device::iv_sweep(&p, MemristorState::new(0.5), &vec![0.0; 100], 1e-11);
    c.check(still.iter().all(|s| s.i == 0.0 && s.w == 0.5), || {
        "zero drive moved the device".into()
    });
    let r = runner(256).run(
        &(0.0f64..=1.0, -3.0f64..3.0, 1e-12f64..1e-6),
        |(w, v, dt)| {
            let s = device::step_state(&p, MemristorState::new(w), v, dt);
            prop_assert!((0.0..=1.0).contains(&s.w()));
            if v > p.v_open && v < p.v_closed {
                prop_assert_eq!(s.w(), w);
            }
            if v < 0.0 {
                let i = device::current(&p, MemristorState::new(w), v);
                prop_assert!(i.abs() <= v.abs() / p.r_off * (1.0 + 1e-12));
            }
            Ok(())
        },
    );
    c.check(r.is_ok(), || format!("property run: {r:?}"));
    c
}

fn main() {
    let criteria: [fn() -> Criterion; 7] = [
        criterion_1_digest_correctness,
        criterion_2_cycle_accounting,
        criterion_3_operation_equivalence,
        criterion_4_gate_validation,
        criterion_5_accounting_formulas,
        criterion_6_energy,
        criterion_7_device_model,
    ];
    let mut failed = 0;
    for (n, f) in criteria.into_iter().enumerate() {
        let ok = match std::panic::catch_unwind(f) {
            Ok(c) => c.finish(),
            Err(_) => {
                println!("criterion {}: FAIL (panicked)", n + 1);
                false
            }
        };
        failed += usize::from(!ok);
    }
    println!("acceptance: {} of 7 criteria passed", 7 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
