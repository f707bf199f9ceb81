//! Budgeted backtracking matcher for the full dialect.
//!
//! Patterns compile to a small instruction program that runs on an explicit
//! backtracking stack. Every executed instruction costs one step; evaluation
//! stops with a timeout once the step budget or the optional wall-clock cap is
//! exhausted, so catastrophic-backtracking patterns cannot stall a scan.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::ast::{AnchorKind, GroupKind, LookDirection, Node, RegexAst, Shorthand};
use crate::charset::CharSet;

pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;
pub const DEFAULT_WALL_CAP: Duration = Duration::from_millis(100);
pub const DEFAULT_MAX_INPUT_LEN: usize = 4096;
const MAX_PROGRAM_LEN: usize = 200_000;
const DEADLINE_CHECK_INTERVAL: u64 = 4096;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchMode {
    /// Match at any start offset (search semantics).
    #[default]
    Partial,
    /// Match the entire input.
    Full,
}

impl std::str::FromStr for MatchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "partial" => Ok(MatchMode::Partial),
            "full" => Ok(MatchMode::Full),
            other => Err(format!("unknown match mode {other:?} (expected partial or full)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub budget: u64,
    /// Per-evaluation wall-clock cap. `None` keeps verdicts fully deterministic.
    pub wall_cap: Option<Duration>,
    pub max_input_len: usize,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            budget: DEFAULT_STEP_BUDGET,
            wall_cap: Some(DEFAULT_WALL_CAP),
            max_input_len: DEFAULT_MAX_INPUT_LEN,
        }
    }
}

impl MatchConfig {
    pub fn with_budget(budget: u64) -> Self {
        Self { budget, wall_cap: None, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Match,
    NoMatch,
    Timeout,
    Unsupported,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchOutcome {
    pub verdict: Verdict,
    /// Equals the budget when the step budget ran out. A wall-clock timeout
    /// reports the steps actually executed.
    pub steps_used: u64,
    pub elapsed: Duration,
}

impl MatchOutcome {
    pub fn is_match(&self) -> bool {
        self.verdict == Verdict::Match
    }

    pub fn is_completed(&self) -> bool {
        matches!(self.verdict, Verdict::Match | Verdict::NoMatch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("compiled program exceeds {MAX_PROGRAM_LEN} instructions")]
pub struct ProgramTooLarge;

#[derive(Debug, Clone)]
enum Inst {
    Char(char),
    /// Compares case-folded characters; holds the folded form.
    CharFold(char),
    /// Membership in a positive set, case-closed under `fold`, then negated.
    Set {
        set: usize,
        fold: bool,
        negated: bool,
    },
    Any,
    /// Try the first target, backtrack to the second.
    Split(usize, usize),
    Jmp(usize),
    Save(usize),
    Assert(AnchorKind),
    Backref {
        group: usize,
        fold: bool,
    },
    /// Runs the body at `body` as an atomic sub-match, then continues at pc + 1.
    Look {
        ahead: bool,
        negated: bool,
        width: usize,
        body: usize,
    },
    MarkPos(usize),
    /// Fails when no input was consumed since the matching `MarkPos`.
    CheckProgress(usize),
    Match,
}

/// A compiled pattern, reusable across inputs.
#[derive(Debug, Clone)]
pub struct Matcher {
    prog: Vec<Inst>,
    sets: Vec<CharSet>,
    slots: usize,
    regs: usize,
}

fn fold(c: char) -> char {
    if c.is_ascii() {
        return c.to_ascii_lowercase();
    }
    let mut lower = c.to_lowercase();
    match (lower.next(), lower.next()) {
        (Some(l), None) => l,
        _ => c,
    }
}

fn is_word(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

struct Compiler {
    prog: Vec<Inst>,
    sets: Vec<CharSet>,
    regs: usize,
}

impl Compiler {
    fn emit(&mut self, inst: Inst) -> Result<usize, ProgramTooLarge> {
        if self.prog.len() >= MAX_PROGRAM_LEN {
            return Err(ProgramTooLarge);
        }
        self.prog.push(inst);
        Ok(self.prog.len() - 1)
    }

    fn pc(&self) -> usize {
        self.prog.len()
    }

    fn set(&mut self, set: CharSet, fold: bool, negated: bool) -> Result<usize, ProgramTooLarge> {
        self.sets.push(set);
        self.emit(Inst::Set { set: self.sets.len() - 1, fold, negated })
    }

    fn patch_split_second(&mut self, at: usize, target: usize) {
        if let Inst::Split(_, second) = &mut self.prog[at] {
            *second = target;
        }
    }

    fn compile(&mut self, node: &Node, ci: bool) -> Result<(), ProgramTooLarge> {
        match node {
            Node::Empty | Node::SetFlags(_) => {}
            Node::Literal(c) if ci => {
                self.emit(Inst::CharFold(fold(*c)))?;
            }
            Node::Literal(c) => {
                self.emit(Inst::Char(*c))?;
            }
            Node::Dot => {
                self.emit(Inst::Any)?;
            }
            Node::Class(class) => {
                self.set(class.item_set(), ci, class.negated)?;
            }
            Node::Shorthand(sh) => {
                self.set(Shorthand::positive_set(sh.kind), ci, sh.negated)?;
            }
            Node::Anchor(kind) => {
                self.emit(Inst::Assert(*kind))?;
            }
            Node::Concat(items) => {
                for item in items {
                    self.compile(item, ci)?;
                }
            }
            Node::Alternation(branches) => {
                let mut jumps = Vec::with_capacity(branches.len());
                for (i, branch) in branches.iter().enumerate() {
                    if i + 1 < branches.len() {
                        let split = self.emit(Inst::Split(self.pc() + 1, usize::MAX))?;
                        self.compile(branch, ci)?;
                        jumps.push(self.emit(Inst::Jmp(usize::MAX))?);
                        let next = self.pc();
                        self.patch_split_second(split, next);
                    } else {
                        self.compile(branch, ci)?;
                    }
                }
                let end = self.pc();
                for j in jumps {
                    self.prog[j] = Inst::Jmp(end);
                }
            }
            Node::Group(group) => match &group.kind {
                GroupKind::Capture { index } | GroupKind::Named { index, .. } => {
                    let slot = *index as usize * 2;
                    self.emit(Inst::Save(slot))?;
                    self.compile(&group.child, ci)?;
                    self.emit(Inst::Save(slot + 1))?;
                }
                GroupKind::NonCapture => self.compile(&group.child, ci)?,
                GroupKind::Flags(flags) => self.compile(&group.child, flags.case_insensitive)?,
            },
            Node::Backref(b) => {
                self.emit(Inst::Backref { group: b.index as usize, fold: ci })?;
            }
            Node::Look(look) => {
                let width = look.child.fixed_width().unwrap_or(0);
                let at = self.emit(Inst::Look {
                    ahead: look.direction == LookDirection::Ahead,
                    negated: look.negated,
                    width,
                    body: 0,
                })?;
                let jump = self.emit(Inst::Jmp(usize::MAX))?;
                let body = self.pc();
                self.compile(&look.child, ci)?;
                self.emit(Inst::Match)?;
                let after = self.pc();
                self.prog[jump] = Inst::Jmp(after);
                if let Inst::Look { body: b, .. } = &mut self.prog[at] {
                    *b = body;
                }
            }
            Node::Repeat(rep) => {
                for _ in 0..rep.min {
                    self.compile(&rep.child, ci)?;
                }
                match rep.max {
                    None => {
                        let guard = (rep.child.min_width() == 0).then(|| {
                            self.regs += 1;
                            self.regs - 1
                        });
                        let head = self.pc();
                        if let Some(r) = guard {
                            self.emit(Inst::MarkPos(r))?;
                        }
                        let split = self.emit(Inst::Split(usize::MAX, usize::MAX))?;
                        let body = self.pc();
                        self.compile(&rep.child, ci)?;
                        if let Some(r) = guard {
                            self.emit(Inst::CheckProgress(r))?;
                        }
                        self.emit(Inst::Jmp(head))?;
                        let exit = self.pc();
                        self.prog[split] =
                            if rep.greedy { Inst::Split(body, exit) } else { Inst::Split(exit, body) };
                    }
                    Some(max) => {
                        let mut splits = Vec::new();
                        for _ in rep.min..max {
                            splits.push(self.emit(Inst::Split(usize::MAX, usize::MAX))?);
                            self.compile(&rep.child, ci)?;
                        }
                        let exit = self.pc();
                        for s in splits {
                            self.prog[s] =
                                if rep.greedy { Inst::Split(s + 1, exit) } else { Inst::Split(exit, s + 1) };
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

enum Frame {
    Alt(usize, usize),
    Slot(usize, Option<usize>),
    Reg(usize, usize),
}

enum Abort {
    Budget,
    Deadline,
}

struct Vm<'a> {
    m: &'a Matcher,
    input: &'a [char],
    steps: u64,
    budget: u64,
    deadline: Option<Instant>,
}

impl Vm<'_> {
    fn tick(&mut self) -> Result<(), Abort> {
        self.steps += 1;
        if self.steps > self.budget {
            return Err(Abort::Budget);
        }
        if self.steps.is_multiple_of(DEADLINE_CHECK_INTERVAL) {
            if let Some(deadline) = self.deadline {
                if Instant::now() >= deadline {
                    return Err(Abort::Deadline);
                }
            }
        }
        Ok(())
    }

    fn set_contains(&self, set: usize, fold_case: bool, negated: bool, c: char) -> bool {
        let set = &self.m.sets[set];
        let hit = set.contains(c)
            || fold_case && (set.contains(fold(c)) || c.to_uppercase().any(|u| set.contains(u)));
        hit != negated
    }

    fn assert(&self, kind: AnchorKind, pos: usize) -> bool {
        let before = pos > 0 && is_word(self.input[pos - 1]);
        let after = pos < self.input.len() && is_word(self.input[pos]);
        match kind {
            AnchorKind::Start => pos == 0,
            AnchorKind::End => pos == self.input.len(),
            AnchorKind::WordBoundary => before != after,
            AnchorKind::NotWordBoundary => before == after,
        }
    }

    /// Runs from `pc` at `pos`; on success `slots` hold the captures of the
    /// first match found in priority order.
    fn run(
        &mut self,
        start_pc: usize,
        start_pos: usize,
        slots: &mut [Option<usize>],
        regs: &mut [usize],
        required_end: Option<usize>,
    ) -> Result<bool, Abort> {
        let input = self.input;
        let mut stack: Vec<Frame> = Vec::new();
        let (mut pc, mut pos) = (start_pc, start_pos);
        loop {
            self.tick()?;
            let advanced = match &self.m.prog[pc] {
                Inst::Char(c) => {
                    let ok = input.get(pos) == Some(c);
                    if ok {
                        pos += 1;
                        pc += 1;
                    }
                    ok
                }
                Inst::CharFold(c) => {
                    let ok = input.get(pos).is_some_and(|x| fold(*x) == *c);
                    if ok {
                        pos += 1;
                        pc += 1;
                    }
                    ok
                }
                Inst::Set { set, fold, negated } => {
                    let ok = input.get(pos).is_some_and(|&x| self.set_contains(*set, *fold, *negated, x));
                    if ok {
                        pos += 1;
                        pc += 1;
                    }
                    ok
                }
                Inst::Any => {
                    let ok = input.get(pos).is_some_and(|&x| x != '\n');
                    if ok {
                        pos += 1;
                        pc += 1;
                    }
                    ok
                }
                Inst::Split(first, second) => {
                    stack.push(Frame::Alt(*second, pos));
                    pc = *first;
                    true
                }
                Inst::Jmp(target) => {
                    pc = *target;
                    true
                }
                Inst::Save(slot) => {
                    stack.push(Frame::Slot(*slot, slots[*slot]));
                    slots[*slot] = Some(pos);
                    pc += 1;
                    true
                }
                Inst::Assert(kind) => {
                    let ok = self.assert(*kind, pos);
                    pc += 1;
                    ok
                }
                Inst::Backref { group, fold: fold_case } => match (slots[group * 2], slots[group * 2 + 1]) {
                    (Some(s), Some(e)) if s <= e => {
                        let len = e - s;
                        let ok = pos + len <= input.len()
                            && (0..len).all(|i| {
                                let (a, b) = (input[s + i], input[pos + i]);
                                a == b || *fold_case && fold(a) == fold(b)
                            });
                        if ok {
                            pos += len;
                            pc += 1;
                        }
                        ok
                    }
                    _ => false,
                },
                Inst::Look { ahead, negated, width, body } => {
                    let (ahead, negated, width, body) = (*ahead, *negated, *width, *body);
                    let origin = if ahead { Some(pos) } else { pos.checked_sub(width) };
                    let mut sub_slots = slots.to_vec();
                    let mut sub_regs = regs.to_vec();
                    let matched = match origin {
                        Some(origin) => {
                            let end = if ahead { None } else { Some(pos) };
                            self.run(body, origin, &mut sub_slots, &mut sub_regs, end)?
                        }
                        None => false,
                    };
                    if matched != negated {
                        if matched {
                            for (i, v) in sub_slots.into_iter().enumerate() {
                                if slots[i] != v {
                                    stack.push(Frame::Slot(i, slots[i]));
                                    slots[i] = v;
                                }
                            }
                        }
                        pc += 1;
                        true
                    } else {
                        false
                    }
                }
                Inst::MarkPos(r) => {
                    stack.push(Frame::Reg(*r, regs[*r]));
                    regs[*r] = pos;
                    pc += 1;
                    true
                }
                Inst::CheckProgress(r) => {
                    let ok = regs[*r] != pos;
                    pc += 1;
                    ok
                }
                Inst::Match => {
                    if required_end.is_none_or(|end| end == pos) {
                        return Ok(true);
                    }
                    false
                }
            };
            if advanced {
                continue;
            }
            loop {
                match stack.pop() {
                    None => return Ok(false),
                    Some(Frame::Alt(p, q)) => {
                        pc = p;
                        pos = q;
                        break;
                    }
                    Some(Frame::Slot(s, v)) => slots[s] = v,
                    Some(Frame::Reg(r, v)) => regs[r] = v,
                }
            }
        }
    }
}

impl Matcher {
    pub fn new(ast: &RegexAst) -> Result<Self, ProgramTooLarge> {
        let mut c = Compiler { prog: Vec::new(), sets: Vec::new(), regs: 0 };
        c.compile(ast.root(), ast.case_insensitive())?;
        c.emit(Inst::Match)?;
        Ok(Matcher {
            prog: c.prog,
            sets: c.sets,
            slots: (ast.capture_count() as usize + 1) * 2,
            regs: c.regs,
        })
    }

    pub fn program_len(&self) -> usize {
        self.prog.len()
    }

    pub fn run(&self, input: &[char], mode: MatchMode, config: &MatchConfig) -> MatchOutcome {
        let started = Instant::now();
        if input.len() > config.max_input_len {
            return MatchOutcome { verdict: Verdict::Unsupported, steps_used: 0, elapsed: started.elapsed() };
        }
        let mut vm = Vm {
            m: self,
            input,
            steps: 0,
            budget: config.budget,
            deadline: config.wall_cap.map(|cap| started + cap),
        };
        let mut slots = vec![None; self.slots];
        let mut regs = vec![0; self.regs];
        let result = match mode {
            MatchMode::Full => vm.run(0, 0, &mut slots, &mut regs, Some(input.len())),
            MatchMode::Partial => (|| {
                for start in 0..=input.len() {
                    slots.iter_mut().for_each(|s| *s = None);
                    if vm.run(0, start, &mut slots, &mut regs, None)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            })(),
        };
        let (verdict, steps_used) = match result {
            Ok(true) => (Verdict::Match, vm.steps),
            Ok(false) => (Verdict::NoMatch, vm.steps),
            Err(Abort::Budget) => (Verdict::Timeout, config.budget),
            Err(Abort::Deadline) => (Verdict::Timeout, vm.steps),
        };
        MatchOutcome { verdict, steps_used, elapsed: started.elapsed() }
    }

    pub fn run_str(&self, input: &str, mode: MatchMode, config: &MatchConfig) -> MatchOutcome {
        let chars: Vec<char> = input.chars().collect();
        self.run(&chars, mode, config)
    }
}

/// Compiles and evaluates `ast` against `input` under a step budget.
pub fn safe_match(ast: &RegexAst, input: &str, mode: MatchMode, config: &MatchConfig) -> MatchOutcome {
    match Matcher::new(ast) {
        Ok(m) => m.run_str(input, mode, config),
        Err(ProgramTooLarge) => {
            MatchOutcome { verdict: Verdict::Unsupported, steps_used: 0, elapsed: Duration::ZERO }
        }
    }
}
