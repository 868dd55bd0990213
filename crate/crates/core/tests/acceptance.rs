//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line each; exits nonzero if any fails.

use std::time::{Duration, Instant};

use pec::clocking::{frequency_of, MAX_CONTROL_WORD};
use pec::config::Config;
use pec::control::{next_state, ControlInputs, FsmState, Module};
use pec::isa::{assemble, decode, disassemble, encode, Instruction, Opcode, Reg, RomImage, ROM_WORDS};
use pec::machine::{Machine, MachineOptions, RAM_WORDS};
use pec::peripherals::{bcd_to_7seg, Device, Direction};
use pec::power::{estimate, power_per_mhz, ActivityTrace};
use pec::reference;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Verdict);

fn rng(stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(0x5EC0_0C0D);
    r.set_stream(stream);
    r
}

fn within_rel(actual: f64, expected: f64, tol: f64) -> bool {
    ((actual - expected) / expected).abs() <= tol
}

fn reg(i: u8) -> Reg {
    Reg::new(i).unwrap()
}

fn random_instruction(r: &mut impl Rng, ops: &[Opcode]) -> Instruction {
    let op = ops[r.gen_range(0..ops.len())];
    Instruction::new(op, reg(r.gen_range(0..8)), reg(r.gen_range(0..8)), r.gen())
}

fn program_image(prog: &[Instruction]) -> RomImage {
    let words: Vec<u16> = prog.iter().map(encode).collect();
    RomImage::from_prefix(&words).unwrap()
}

// 1 ------------------------------------------------------------------------

fn power_reproduction() -> Verdict {
    let cfg = Config::default();
    let (_, outcome) = reference::run(cfg.machine_options(true)).map_err(|e| e.to_string())?;
    let report =
        estimate(&ActivityTrace::from_records(&outcome.trace), &cfg.power_config()).map_err(|e| e.to_string())?;
    let detail = report.summary_line();
    let ok = within_rel(report.total_ungated_mw, 273.0, 0.01)
        && within_rel(report.total_gated_mw, 182.0, 0.01)
        && (report.savings_percent - 100.0 / 3.0).abs() <= 0.5;
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// 2 ------------------------------------------------------------------------

fn power_per_mhz_linear() -> Verdict {
    let cfg = Config::default();
    let per_mhz = power_per_mhz(&cfg.power);
    if (per_mhz - 3.62).abs() > 0.01 {
        return Err(format!("{per_mhz:.4} mW/MHz"));
    }
    let (_, outcome) = reference::run(cfg.machine_options(true)).map_err(|e| e.to_string())?;
    let trace = ActivityTrace::from_records(&outcome.trace);
    let mut worst = 0.0f64;
    for w in 0..=MAX_CONTROL_WORD {
        let f = frequency_of(w).unwrap();
        let report = estimate(&trace, &cfg.power.with_frequency(f)).map_err(|e| e.to_string())?;
        let expected = per_mhz * f / 1e6;
        worst = worst.max(((report.total_ungated_mw - expected) / expected).abs());
    }
    let detail = format!("{per_mhz:.4} mW/MHz, worst linearity error {worst:.1e} over 16 words");
    if worst <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// 3 ------------------------------------------------------------------------

fn oscillator() -> Verdict {
    let f0 = frequency_of(0).unwrap();
    let f15 = frequency_of(15).unwrap();
    let detail = format!("f(0)={:.3} MHz f(15)={:.3} MHz", f0 / 1e6, f15 / 1e6);
    if !within_rel(f0, 134e6, 1e-3) || !within_rel(f15, 44e6, 1e-3) {
        return Err(detail);
    }
    for w in 0..MAX_CONTROL_WORD {
        if frequency_of(w + 1).unwrap() >= frequency_of(w).unwrap() {
            return Err(format!("not decreasing at w={w}"));
        }
    }
    if frequency_of(16).is_ok() {
        return Err("control word 16 accepted".into());
    }
    Ok(detail + ", strictly decreasing")
}

// 4 ------------------------------------------------------------------------

fn isa_roundtrip() -> Verdict {
    let mut checked = 0u32;
    for op in Opcode::ALL {
        for rd in 0..8 {
            for rs in 0..8 {
                for operand in 0..=255u8 {
                    let i = Instruction::new(op, reg(rd), reg(rs), operand);
                    if decode(encode(&i)) != Ok(i) {
                        return Err(format!("{i} does not roundtrip"));
                    }
                    checked += 1;
                }
            }
        }
    }
    let mut r = rng(4);
    for n in 0..100 {
        let mut words = [0u16; ROM_WORDS];
        r.fill(&mut words[..]);
        let img = RomImage::new(words);
        let text = disassemble(&img);
        let again = assemble(&text).map_err(|e| format!("image {n}: {e}"))?.image;
        if again != img {
            return Err(format!("image {n} differs after assemble(disassemble)"));
        }
    }
    Ok(format!("{checked} instructions, 100 random images"))
}

// 5 ------------------------------------------------------------------------

fn gating_transparency() -> Verdict {
    let mut r = rng(5);
    for n in 0..500 {
        let prog: Vec<Instruction> = (0..50).map(|_| random_instruction(&mut r, &Opcode::ALL)).collect();
        let image = program_image(&prog);
        let pins: Vec<(u64, u8)> = (0..4).map(|_| (r.gen_range(0..600), r.gen())).collect();
        let run = |gating: bool| {
            let mut m = Machine::with_options(
                image.clone(),
                MachineOptions {
                    gating,
                    ..MachineOptions::default()
                },
            );
            let injections: Vec<_> = {
                let mut v: Vec<_> = pins
                    .iter()
                    .map(|&(cycle, v)| pec::machine::Injection {
                        cycle,
                        action: pec::machine::InjectAction::Port1(v),
                    })
                    .collect();
                v.sort_by_key(|i| i.cycle);
                v
            };
            let result = m.run_with(600, true, &injections).map(|o| o.stop);
            (result, m.state().clone(), m.io().clone(), m.events().to_vec(), m.fsm())
        };
        let gated = run(true);
        let ungated = run(false);
        if gated != ungated {
            return Err(format!("program {n} diverges: {:?} vs {:?}", gated.0, ungated.0));
        }
    }
    Ok("500 programs identical with and without gating".into())
}

// 6 ------------------------------------------------------------------------

/// Architectural state as the straight-line reference sees it.
#[derive(Debug, PartialEq)]
struct OracleState {
    regs: [u16; 8],
    z: bool,
    l: bool,
    ram: Vec<u16>,
    port0: Vec<u8>,
    segments: Vec<u8>,
    uart: Vec<u8>,
    port1_reads: usize,
}

/// Naive interpreter over a branch-free instruction list, written from the
/// instruction descriptions alone.
fn oracle(prog: &[Instruction], regs: [u16; 8], ram: &[u16], port1: u8) -> OracleState {
    let mut s = OracleState {
        regs,
        z: false,
        l: false,
        ram: ram.to_vec(),
        port0: vec![],
        segments: vec![],
        uart: vec![],
        port1_reads: 0,
    };
    for i in prog {
        let d = i.rd.index();
        let a = s.regs[d] as u32;
        let b = s.regs[i.rs.index()] as u32;
        let k = i.operand as usize;
        let mask = |x: u32| (x & 0xFFFF) as u16;
        let result: Option<u16> = match i.opcode.mnemonic() {
            "NOP" => None,
            "LOAD" => {
                s.regs[d] = s.ram[k];
                None
            }
            "STORE" => {
                s.ram[k] = a as u16;
                None
            }
            "MOVE" => {
                s.regs[d] = b as u16;
                None
            }
            "LOADI" => {
                s.regs[d] = k as u16;
                None
            }
            "INC" => Some(mask(a + 1)),
            "DEC" => {
                s.l = a == 0;
                Some(mask(a + 0xFFFF))
            }
            "AND" => Some((a & b) as u16),
            "OR" => Some((a | b) as u16),
            "XOR" => Some((a ^ b) as u16),
            "NOT" => Some(mask(!a)),
            "ADD" => Some(mask(a + b)),
            "SUB" => {
                s.l = a < b;
                Some(mask(a + 0x1_0000 - b))
            }
            "ZERO" => Some(0),
            "SHL" => Some(mask(a * 2)),
            "SHR" => Some((a / 2) as u16),
            "ROR" => Some(mask((a >> 1) | ((a & 1) << 15))),
            "ROL" => Some(mask((a << 1) | (a >> 15))),
            "PORT0" => {
                s.port0.push(a as u8);
                None
            }
            "PORT1" => {
                s.regs[d] = port1 as u16;
                s.port1_reads += 1;
                None
            }
            "B7S" => {
                s.segments.push(
                    [
                        0x3F, 0x06, 0x5B, 0x4F, 0x66, 0x6D, 0x7D, 0x07, 0x7F, 0x6F, 0, 0, 0, 0, 0, 0,
                    ][(a & 0xF) as usize],
                );
                None
            }
            "UARTS" => {
                s.uart.push(a as u8);
                None
            }
            other => panic!("branch {other} in a straight-line program"),
        };
        if let Some(v) = result {
            s.regs[d] = v;
            s.z = v == 0;
        }
    }
    s
}

fn oracle_equivalence() -> Verdict {
    let straight: Vec<Opcode> = Opcode::ALL.into_iter().filter(|op| !op.is_branch()).collect();
    let mut r = rng(6);
    for n in 0..1000 {
        let prog: Vec<Instruction> = (0..50).map(|_| random_instruction(&mut r, &straight)).collect();
        let regs: [u16; 8] = r.gen();
        let ram: Vec<u16> = (0..RAM_WORDS).map(|_| r.gen()).collect();
        let port1: u8 = r.gen();

        let mut m = Machine::new(program_image(&prog));
        m.state_mut().regs = regs;
        m.state_mut().ram.copy_from_slice(&ram);
        m.io_mut().ports.port1_input = port1;
        for _ in 0..prog.len() {
            m.step().map_err(|e| format!("program {n}: {e}"))?;
        }
        let events = m.events();
        let collect = |dev: Device, dir: Direction| -> Vec<u8> {
            events
                .iter()
                .filter(|e| e.device == dev && e.direction == dir)
                .map(|e| e.value)
                .collect()
        };
        let sim = OracleState {
            regs: m.state().regs,
            z: m.state().flags.z,
            l: m.state().flags.l,
            ram: m.state().ram.to_vec(),
            port0: collect(Device::Port0, Direction::Out),
            segments: collect(Device::SevenSeg, Direction::Out),
            // Bytes appear as events once shifted out; the rest are queued.
            uart: collect(Device::Uart, Direction::Out)
                .into_iter()
                .chain(m.io().uart.tx_queue().iter().copied())
                .collect(),
            port1_reads: collect(Device::Port1, Direction::In).len(),
        };
        let want = oracle(&prog, regs, &ram, port1);
        if sim != want {
            return Err(format!(
                "program {n}: simulator {:?} != oracle {:?}",
                (sim.z, sim.l, &sim.port0, &sim.segments, &sim.uart, sim.port1_reads),
                (
                    want.z,
                    want.l,
                    &want.port0,
                    &want.segments,
                    &want.uart,
                    want.port1_reads
                )
            ));
        }
        if m.state().pc as usize != prog.len() {
            return Err(format!(
                "program {n}: pc {} after {} instructions",
                m.state().pc,
                prog.len()
            ));
        }
    }
    Ok("1000 straight-line programs match the reference interpreter".into())
}

// 7 ------------------------------------------------------------------------

fn gated_stability() -> Verdict {
    let mut r = rng(7);
    let mut gated_checks = 0u64;
    for n in 0..100 {
        let prog: Vec<Instruction> = (0..50).map(|_| random_instruction(&mut r, &Opcode::ALL)).collect();
        let rx = n % 2 == 1;
        let cfg = Config {
            uart_rx_to_port1: rx,
            ..Config::default()
        };
        let mut m = Machine::with_options(program_image(&prog), cfg.machine_options(true));
        for cycle in 0..600u64 {
            if r.gen_ratio(1, 20) {
                m.io_mut().ports.port1_input = r.gen();
            }
            if rx && r.gen_ratio(1, 30) && m.io().uart.rx_queue().len() < 200 {
                m.io_mut().uart.inject_rx(r.gen()).unwrap();
            }
            let before = Module::ALL.map(|md| m.module_fingerprint(md));
            let tick = m.tick().map_err(|e| format!("program {n}: {e}"))?;
            for md in Module::ALL {
                if !tick.record.signals.enabled(md) {
                    gated_checks += 1;
                    if m.module_fingerprint(md) != before[md.index()] {
                        return Err(format!("program {n}, cycle {cycle}: gated {md} changed"));
                    }
                }
            }
        }
    }
    Ok(format!(
        "{gated_checks} gated module-cycles held still over 100 programs"
    ))
}

// 8 ------------------------------------------------------------------------

fn control_fsm() -> Verdict {
    let bools = [false, true];
    for state in FsmState::ALL {
        for op in Opcode::ALL {
            for interrupt in bools {
                for sleep in bools {
                    let inputs = ControlInputs {
                        reset: true,
                        interrupt,
                        sleep,
                    };
                    if next_state(state, op, inputs) != FsmState::Reset1 {
                        return Err(format!("reset ignored in {state:?} on {op}"));
                    }
                    for reset in bools {
                        let inputs = ControlInputs {
                            reset,
                            interrupt,
                            sleep,
                        };
                        let stays = next_state(FsmState::Idle, op, inputs) == FsmState::Idle;
                        if stays == (interrupt || reset) {
                            return Err(format!("idle exit wrong for {inputs:?}"));
                        }
                    }
                }
            }
        }
    }
    for op in Opcode::ALL {
        let quiet = ControlInputs::default();
        let s = next_state(next_state(FsmState::Reset1, op, quiet), op, quiet);
        if s != FsmState::Fetch {
            return Err(format!("reset1 + 2 cycles reached {s:?}"));
        }
    }

    // The same properties on the assembled machine.
    let rom = assemble("loop: INC R0\nBI loop").unwrap().image;
    let mut m = Machine::new(rom);
    m.run(20, false).map_err(|e| e.to_string())?;
    m.reset();
    if m.fsm() != FsmState::Reset1 {
        return Err("machine reset did not enter reset1".into());
    }
    m.tick().unwrap();
    m.tick().unwrap();
    if m.fsm() != FsmState::Fetch {
        return Err(format!("machine reached {:?} two cycles after reset", m.fsm()));
    }
    m.request_idle();
    m.run(6, false).map_err(|e| e.to_string())?;
    let parked = m.state().clone();
    m.run(100, false).map_err(|e| e.to_string())?;
    if m.fsm() != FsmState::Idle || m.state().regs != parked.regs || m.state().pc != parked.pc {
        return Err("idle machine made progress".into());
    }
    m.interrupt();
    m.tick().unwrap();
    if m.fsm() != FsmState::Fetch {
        return Err("interrupt did not wake the machine".into());
    }
    Ok(format!(
        "{} (state, opcode, input) cases",
        FsmState::ALL.len() * Opcode::ALL.len() * 8
    ))
}

fn main() {
    // Sanity-check the golden segment table before relying on it above.
    assert_eq!(bcd_to_7seg(8), 0x7F);

    let criteria: [Criterion; 8] = [
        ("1 power reproduction", Duration::from_secs(5), power_reproduction),
        ("2 power per MHz", Duration::from_secs(1), power_per_mhz_linear),
        ("3 oscillator", Duration::from_secs(1), oscillator),
        ("4 ISA roundtrip", Duration::from_secs(10), isa_roundtrip),
        ("5 gating transparency", Duration::from_secs(30), gating_transparency),
        ("6 oracle equivalence", Duration::from_secs(30), oracle_equivalence),
        ("7 gated-module stability", Duration::from_secs(30), gated_stability),
        ("8 control FSM", Duration::from_secs(1), control_fsm),
    ];
    let mut failed = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let verdict = check();
        let elapsed = start.elapsed();
        let verdict = match verdict {
            Ok(detail) if elapsed > budget => Err(format!("{detail}; took {elapsed:.2?}, budget {budget:?}")),
            v => v,
        };
        match verdict {
            Ok(detail) => println!("PASS criterion {name}: {detail} ({elapsed:.2?})"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail} ({elapsed:.2?})");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
