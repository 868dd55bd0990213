use pec::isa::{assemble, decode, encode, Instruction, Opcode, Reg};
use pec::machine::{Machine, RAM_WORDS};
use pec::peripherals::bcd_to_7seg;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn reg(i: u8) -> Reg {
    Reg::new(i).unwrap()
}

#[test]
fn sevenseg_matches_golden_table() {
    let golden = include_str!("data/sevenseg.golden");
    let mut seen = 0;
    for line in golden.lines().filter(|l| !l.starts_with('#')) {
        let (digit, bits) = line.split_once(' ').unwrap();
        let digit: u8 = digit.parse().unwrap();
        let bits = u8::from_str_radix(bits, 2).unwrap();
        assert_eq!(bcd_to_7seg(digit), bits, "digit {digit}");
        seen += 1;
    }
    assert_eq!(seen, 16);
}

#[test]
fn hand_assembled_encodings() {
    // 01101_001_010_00000 and 00100_011_11111111
    assert_eq!(
        encode(&Instruction::reg_reg(Opcode::Add, reg(1), reg(2))),
        0b0110_1001_0100_0000
    );
    assert_eq!(
        encode(&Instruction::reg_imm(Opcode::Loadi, reg(3), 0xFF)),
        0b0010_0011_1111_1111
    );
    assert_eq!(decode(0x6940).unwrap().to_string(), "ADD R1, R2");
    assert!(decode(0xA800).is_err());
    assert_eq!(assemble("loop: BI loop").unwrap().image.word(0), 0b00101 << 11);
}

#[test]
fn store_then_load_trace() {
    let rom = assemble("LOADI R0, 0xAB\nSTORE R0, 0x10\nLOAD R3, 0x10").unwrap().image;
    let mut m = Machine::new(rom);
    for _ in 0..3 {
        m.step().unwrap();
    }
    assert_eq!(m.state().regs[3], 0x00AB);
}

#[test]
fn sub_flags_over_subgrid() {
    // Every pair from a 256-value grid spread across the 16-bit range.
    let grid: Vec<u16> = (0..256u32).map(|i| (i * 257) as u16 ^ (i as u16 >> 3)).collect();
    let rom = assemble("SUB R1, R2").unwrap().image;
    let mut m = Machine::new(rom);
    m.step().unwrap();
    for &a in &grid {
        for &b in &grid {
            m.state_mut().pc = 0;
            m.state_mut().regs[1] = a;
            m.state_mut().regs[2] = b;
            m.step().unwrap();
            let f = m.state().flags;
            assert_eq!(f.z, a == b, "z for {a:#x} - {b:#x}");
            assert_eq!(f.l, a < b, "l for {a:#x} - {b:#x}");
            assert_eq!(m.state().regs[1], a.wrapping_sub(b));
        }
    }
}

#[test]
fn each_step_touches_one_register_and_one_ram_word() {
    let mut r = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let words: Vec<u16> = (0..64)
            .map(|_| {
                let op = Opcode::ALL[r.gen_range(0..Opcode::ALL.len())];
                encode(&Instruction::new(
                    op,
                    reg(r.gen_range(0..8)),
                    reg(r.gen_range(0..8)),
                    r.gen(),
                ))
            })
            .collect();
        let mut m = Machine::new(pec::isa::RomImage::from_prefix(&words).unwrap());
        for i in 0..8 {
            m.state_mut().regs[i] = r.gen();
        }
        for _ in 0..64 {
            let before = m.state().clone();
            m.step().unwrap();
            let after = m.state();
            let regs = (0..8).filter(|&i| before.regs[i] != after.regs[i]).count();
            let ram = (0..RAM_WORDS).filter(|&i| before.ram[i] != after.ram[i]).count();
            assert!(regs <= 1 && ram <= 1, "{regs} registers and {ram} RAM words changed");
            assert_eq!(before.rom, after.rom);
        }
    }
}
