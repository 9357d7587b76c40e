//! The reference prefix-free machine.
//!
//! Eight 3-bit opcodes, two flags, an aux pointer and per-slot loop counters.
//! Every bit of the program stream (opcodes, operands and data) is pulled
//! only when the interpreter needs it, so the set of effective halting
//! programs is prefix-free by construction. The normative description lives
//! in `machine/reference-v1.txt`; its hash is the machine's version id.
//!
//! [`Machine`] is a resumable interpreter: [`Machine::resume`] runs until it
//! halts, exhausts its budget, provably diverges, or needs another input bit.
//! The caller feeds that bit with [`Machine::feed`]. Enumeration clones the
//! machine at every such point instead of re-running programs from scratch.

use std::sync::OnceLock;

use sha2::{Digest, Sha256};

use crate::bits::BitString;

const SPEC_TEXT: &str = include_str!("../machine/reference-v1.txt");

/// Largest unary loop operand; longer operands saturate here.
pub const MAX_LOOP_EXPONENT: u8 = 63;

/// Identity of the frozen opcode semantics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineSpec {
    pub version_id: String,
    pub text: &'static str,
}

impl MachineSpec {
    pub fn reference() -> &'static MachineSpec {
        static SPEC: OnceLock<MachineSpec> = OnceLock::new();
        SPEC.get_or_init(|| {
            let digest = Sha256::digest(SPEC_TEXT.as_bytes());
            let version_id = digest[..4].iter().map(|b| format!("{b:02x}")).collect();
            MachineSpec { version_id, text: SPEC_TEXT }
        })
    }
}

/// Assembly-level instruction, used to build programs by hand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Instr {
    Halt,
    Out0,
    Out1,
    Read,
    Aux,
    /// Skip the next slot when the tested flag (E if `test_oob`, else F)
    /// equals `when`.
    Skip { test_oob: bool, when: bool },
    /// `Loop(0)` jumps to slot 0 unconditionally; `Loop(k)` repeats the code
    /// before it `2^k` times.
    Loop(u8),
    Nop,
}

impl Instr {
    fn opcode(self) -> u64 {
        match self {
            Instr::Halt => 0,
            Instr::Out0 => 1,
            Instr::Out1 => 2,
            Instr::Read => 3,
            Instr::Aux => 4,
            Instr::Skip { .. } => 5,
            Instr::Loop(_) => 6,
            Instr::Nop => 7,
        }
    }

    /// Opcode bits followed by any operand bits.
    pub fn encode(self) -> BitString {
        let mut out = BitString::from_u64(self.opcode(), 3);
        match self {
            Instr::Skip { test_oob, when } => {
                out.push(test_oob);
                out.push(when);
            }
            Instr::Loop(k) => {
                out.extend_from(&BitString::ones(k as usize));
                out.push(false);
            }
            _ => {}
        }
        out
    }
}

/// A piece of a hand-assembled program.
#[derive(Debug, Clone)]
pub enum Token {
    Op(Instr),
    Data(BitString),
}

/// Concatenate tokens in stream order.
///
/// Operands are emitted right after their opcode. That matches the order in
/// which the machine reads them only when every instruction with operands is
/// first reached by executing it, not by skipping over it.
pub fn assemble(tokens: &[Token]) -> BitString {
    let mut out = BitString::new();
    for t in tokens {
        match t {
            Token::Op(i) => out.extend_from(&i.encode()),
            Token::Data(d) => out.extend_from(d),
        }
    }
    out
}

/// Shorthand for programs that contain only instructions.
pub fn assemble_ops(ops: &[Instr]) -> BitString {
    let tokens: Vec<_> = ops.iter().map(|&i| Token::Op(i)).collect();
    assemble(&tokens)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Slot {
    Halt,
    Out(bool),
    Read,
    Aux,
    Nop,
    Skip { cond: Option<u8> },
    Loop { exp: Option<u8>, left: Option<u64> },
}

impl Slot {
    fn decode(op: u8) -> Slot {
        match op {
            0 => Slot::Halt,
            1 => Slot::Out(false),
            2 => Slot::Out(true),
            3 => Slot::Read,
            4 => Slot::Aux,
            5 => Slot::Skip { cond: None },
            6 => Slot::Loop { exp: None, left: None },
            _ => Slot::Nop,
        }
    }
}

/// Which stream the machine wants its next bit from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    /// Opcode and operand bits.
    Code,
    /// READ data bits.
    Data,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Ready,
    Fetch { acc: u8, got: u8 },
    SkipOperand { acc: u8, got: u8 },
    LoopOperand { exp: u8 },
    ReadData,
}

/// Why [`Machine::resume`] returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    Halted,
    Exhausted,
    /// A state recurred with no input consumed in between.
    Diverged,
    NeedBit(Channel),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Snapshot {
    code: Vec<Slot>,
    pc: usize,
    flag: bool,
    oob: bool,
    ap: usize,
}

#[derive(Debug, Clone)]
struct CycleWatch {
    snapshot: Option<Snapshot>,
    epoch: u64,
    power: u64,
    lam: u64,
}

/// Resumable interpreter state.
#[derive(Debug, Clone)]
pub struct Machine<'a> {
    aux: &'a BitString,
    budget: u64,
    code: Vec<Slot>,
    pc: usize,
    flag: bool,
    oob: bool,
    ap: usize,
    output: BitString,
    steps: u64,
    phase: Phase,
    pending: Option<bool>,
    bits_read: u64,
    watch: Option<CycleWatch>,
}

impl<'a> Machine<'a> {
    /// Universal-mode machine: divergence detection on.
    pub fn new(aux: &'a BitString, budget: u64) -> Self {
        Machine {
            aux,
            budget,
            code: Vec::new(),
            pc: 0,
            flag: false,
            oob: false,
            ap: 0,
            output: BitString::new(),
            steps: 0,
            phase: Phase::Ready,
            pending: None,
            bits_read: 0,
            watch: Some(CycleWatch { snapshot: None, epoch: 0, power: 1, lam: 0 }),
        }
    }

    /// Monotone-mode machine. Divergence detection is off because a looping
    /// monotone program may keep writing output.
    pub fn monotone(aux: &'a BitString, budget: u64) -> Self {
        Machine { watch: None, ..Machine::new(aux, budget) }
    }

    pub fn output(&self) -> &BitString {
        &self.output
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn bits_read(&self) -> u64 {
        self.bits_read
    }

    /// Supply the bit requested by the last [`Event::NeedBit`].
    pub fn feed(&mut self, bit: bool) {
        debug_assert!(self.pending.is_none(), "bit fed twice");
        self.pending = Some(bit);
    }

    fn take(&mut self) -> Option<bool> {
        let b = self.pending.take()?;
        self.bits_read += 1;
        Some(b)
    }

    pub fn resume(&mut self) -> Event {
        loop {
            match self.phase {
                Phase::Fetch { acc, got } => {
                    let Some(b) = self.take() else { return Event::NeedBit(Channel::Code) };
                    let (acc, got) = (acc << 1 | b as u8, got + 1);
                    if got == 3 {
                        self.code.push(Slot::decode(acc));
                        self.phase = Phase::Ready;
                    } else {
                        self.phase = Phase::Fetch { acc, got };
                    }
                }
                Phase::SkipOperand { acc, got } => {
                    let Some(b) = self.take() else { return Event::NeedBit(Channel::Code) };
                    let (acc, got) = (acc << 1 | b as u8, got + 1);
                    if got == 2 {
                        self.code[self.pc] = Slot::Skip { cond: Some(acc) };
                        self.phase = Phase::Ready;
                    } else {
                        self.phase = Phase::SkipOperand { acc, got };
                    }
                }
                Phase::LoopOperand { exp } => {
                    let Some(b) = self.take() else { return Event::NeedBit(Channel::Code) };
                    if b {
                        self.phase = Phase::LoopOperand { exp: (exp + 1).min(MAX_LOOP_EXPONENT) };
                    } else {
                        self.code[self.pc] = Slot::Loop { exp: Some(exp), left: None };
                        self.phase = Phase::Ready;
                    }
                }
                Phase::ReadData => {
                    let Some(b) = self.take() else { return Event::NeedBit(Channel::Data) };
                    self.flag = b;
                    self.pc += 1;
                    self.steps += 1;
                    self.phase = Phase::Ready;
                }
                Phase::Ready => {
                    if self.pc >= self.code.len() {
                        self.phase = Phase::Fetch { acc: 0, got: 0 };
                        continue;
                    }
                    if self.code[self.pc] == Slot::Halt {
                        return Event::Halted;
                    }
                    if self.steps >= self.budget {
                        return Event::Exhausted;
                    }
                    if let Some(event) = self.execute() {
                        return event;
                    }
                }
            }
        }
    }

    /// Execute the (non-halt) slot at `pc`. Returns an event only on
    /// detected divergence.
    fn execute(&mut self) -> Option<Event> {
        match self.code[self.pc] {
            Slot::Halt => unreachable!("halt handled by the caller"),
            Slot::Out(b) => {
                self.output.push(b);
                self.pc += 1;
            }
            Slot::Read => {
                self.phase = Phase::ReadData;
                return None;
            }
            Slot::Aux => {
                match self.aux.get(self.ap) {
                    Some(b) => {
                        self.flag = b;
                        self.oob = false;
                        self.ap += 1;
                    }
                    None => {
                        self.flag = false;
                        self.oob = true;
                    }
                }
                self.pc += 1;
            }
            Slot::Nop => self.pc += 1,
            Slot::Skip { cond: None } => {
                self.phase = Phase::SkipOperand { acc: 0, got: 0 };
                return None;
            }
            Slot::Skip { cond: Some(c) } => {
                let tested = if c & 2 != 0 { self.oob } else { self.flag };
                self.pc += if tested == (c & 1 == 1) { 2 } else { 1 };
            }
            Slot::Loop { exp: None, .. } => {
                self.phase = Phase::LoopOperand { exp: 0 };
                return None;
            }
            Slot::Loop { exp: Some(0), .. } => {
                self.steps += 1;
                self.pc = 0;
                return self.check_cycle();
            }
            Slot::Loop { exp: Some(k), left } => {
                let left = left.unwrap_or(if k >= 64 { u64::MAX } else { (1u64 << k) - 1 });
                self.steps += 1;
                if left > 0 {
                    self.code[self.pc] = Slot::Loop { exp: Some(k), left: Some(left - 1) };
                    self.pc = 0;
                    return self.check_cycle();
                }
                self.code[self.pc] = Slot::Loop { exp: Some(k), left: None };
                self.pc += 1;
                return None;
            }
        }
        self.steps += 1;
        None
    }

    // Brent's cycle finding over the states seen at backward jumps. Any
    // input consumption starts a fresh epoch.
    fn check_cycle(&mut self) -> Option<Event> {
        let bits_read = self.bits_read;
        let current = |m: &Self| Snapshot {
            code: m.code.clone(),
            pc: m.pc,
            flag: m.flag,
            oob: m.oob,
            ap: m.ap,
        };
        let fresh = match &self.watch {
            None => return None,
            Some(w) => w.epoch != bits_read || w.snapshot.is_none(),
        };
        if fresh {
            let snap = current(self);
            let w = self.watch.as_mut().expect("checked above");
            *w = CycleWatch { snapshot: Some(snap), epoch: bits_read, power: 1, lam: 0 };
            return None;
        }
        let w = self.watch.as_ref().expect("checked above");
        let snap = w.snapshot.as_ref().expect("checked above");
        if snap.pc == self.pc
            && snap.flag == self.flag
            && snap.oob == self.oob
            && snap.ap == self.ap
            && snap.code == self.code
        {
            return Some(Event::Diverged);
        }
        let (power, lam) = (w.power, w.lam + 1);
        if lam == power {
            let snap = current(self);
            let w = self.watch.as_mut().expect("checked above");
            w.snapshot = Some(snap);
            w.power = power * 2;
            w.lam = 0;
        } else {
            self.watch.as_mut().expect("checked above").lam = lam;
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Halted,
    BudgetExhausted,
    RanOffProgram,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    pub outcome: Outcome,
    /// Meaningful when `outcome == Halted`.
    pub output: BitString,
    pub bits_consumed: usize,
    pub steps: u64,
}

impl RunResult {
    pub fn halted(&self) -> bool {
        self.outcome == Outcome::Halted
    }
}

/// `U_aux(program)` within `budget` steps.
///
/// A run proven divergent is reported as [`Outcome::BudgetExhausted`] with
/// `steps == budget`, which is exactly what running it out would give.
pub fn run(program: &BitString, aux: &BitString, budget: u64) -> RunResult {
    let mut m = Machine::new(aux, budget);
    let mut pos = 0;
    loop {
        let outcome = match m.resume() {
            Event::NeedBit(_) => match program.get(pos) {
                Some(b) => {
                    m.feed(b);
                    pos += 1;
                    continue;
                }
                None => Outcome::RanOffProgram,
            },
            Event::Halted => Outcome::Halted,
            Event::Exhausted => Outcome::BudgetExhausted,
            Event::Diverged => {
                return RunResult {
                    outcome: Outcome::BudgetExhausted,
                    output: m.output,
                    bits_consumed: pos,
                    steps: budget,
                }
            }
        };
        return RunResult { outcome, output: m.output, bits_consumed: pos, steps: m.steps };
    }
}

/// Result of feeding a finite input prefix to a monotone program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotoneRun {
    pub input_prefix: BitString,
    pub output_prefix: BitString,
    pub steps: u64,
    /// Input bits actually read.
    pub input_read: usize,
    pub halted: bool,
}

/// Run `program` in monotone mode: instructions come from `program`, READ
/// takes bits from `input`, and whatever has been written when the run
/// stops (input exhausted, code exhausted, halt or budget) is the output.
pub fn run_monotone(program: &BitString, input: &BitString, budget: u64) -> MonotoneRun {
    let empty = BitString::new();
    let mut m = Machine::monotone(&empty, budget);
    let (mut code_pos, mut data_pos) = (0, 0);
    let halted = loop {
        match m.resume() {
            Event::NeedBit(Channel::Code) => match program.get(code_pos) {
                Some(b) => {
                    m.feed(b);
                    code_pos += 1;
                }
                None => break false,
            },
            Event::NeedBit(Channel::Data) => match input.get(data_pos) {
                Some(b) => {
                    m.feed(b);
                    data_pos += 1;
                }
                None => break false,
            },
            Event::Halted => break true,
            Event::Exhausted | Event::Diverged => break false,
        }
    };
    MonotoneRun {
        input_prefix: input.clone(),
        output_prefix: m.output.clone(),
        steps: m.steps,
        input_read: data_pos,
        halted,
    }
}

/// Monotone program copying its input to the output.
pub fn identity_program() -> BitString {
    use Instr::*;
    assemble_ops(&[
        Read,
        Skip { test_oob: false, when: true },
        Out0,
        Skip { test_oob: false, when: false },
        Out1,
        Loop(0),
    ])
}

/// Monotone program writing every input bit twice.
pub fn doubling_program() -> BitString {
    use Instr::*;
    assemble_ops(&[
        Read,
        Skip { test_oob: false, when: true },
        Out0,
        Skip { test_oob: false, when: true },
        Out0,
        Skip { test_oob: false, when: false },
        Out1,
        Skip { test_oob: false, when: false },
        Out1,
        Loop(0),
    ])
}
