//! Reader and writer for the ISCAS/ITC `.bench` netlist format.
//!
//! ```text
//! # comment
//! INPUT(a)
//! INPUT(b)
//! OUTPUT(y)
//! q = DFF(y)
//! y = NAND(a, b, q)
//! ```
//!
//! Keywords and operator names are case-insensitive. Definitions may appear
//! after their first use. `DFF` lines declare state elements rather than
//! gates.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("signal `{0}` is used but never defined")]
    UndefinedSignal(String),
    #[error("signal `{0}` is defined more than once")]
    DuplicateDefinition(String),
    #[error("unsupported gate `{0}`")]
    UnsupportedGate(String),
    #[error("malformed line {0}")]
    MalformedLine(usize),
    #[error("netlist has no primary inputs")]
    EmptyNetlist,
}

/// Dense index of a signal, assigned in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignalId(pub u32);

impl SignalId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    Not,
    Buf,
    And,
    Nand,
    Or,
    Nor,
    Xor,
    Xnor,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::Not => "NOT",
            GateKind::Buf => "BUF",
            GateKind::And => "AND",
            GateKind::Nand => "NAND",
            GateKind::Or => "OR",
            GateKind::Nor => "NOR",
            GateKind::Xor => "XOR",
            GateKind::Xnor => "XNOR",
        }
    }

    fn from_keyword(op: &str) -> Option<GateKind> {
        Some(match op.to_ascii_uppercase().as_str() {
            "NOT" | "INV" => GateKind::Not,
            "BUF" | "BUFF" => GateKind::Buf,
            "AND" => GateKind::And,
            "NAND" => GateKind::Nand,
            "OR" => GateKind::Or,
            "NOR" => GateKind::Nor,
            "XOR" => GateKind::Xor,
            "XNOR" => GateKind::Xnor,
            _ => return None,
        })
    }

    /// Whether `n` fan-in signals is a legal arity for this operator.
    pub fn accepts_arity(self, n: usize) -> bool {
        match self {
            GateKind::Not | GateKind::Buf => n == 1,
            GateKind::Xor | GateKind::Xnor => n == 2,
            GateKind::And | GateKind::Nand | GateKind::Or | GateKind::Nor => n >= 2,
        }
    }

    /// Boolean evaluation.
    pub fn eval(self, fanin: impl IntoIterator<Item = bool>) -> bool {
        let mut it = fanin.into_iter();
        match self {
            GateKind::Not => !it.next().unwrap_or(false),
            GateKind::Buf => it.next().unwrap_or(false),
            GateKind::And => it.all(|b| b),
            GateKind::Nand => !it.all(|b| b),
            GateKind::Or => it.any(|b| b),
            GateKind::Nor => !it.any(|b| b),
            GateKind::Xor => it.fold(false, |acc, b| acc ^ b),
            GateKind::Xnor => !it.fold(false, |acc, b| acc ^ b),
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateDef {
    pub output: SignalId,
    pub kind: GateKind,
    pub fanin: Vec<SignalId>,
}

/// A D flip-flop: `q` is the registered output, `d` the next-state input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dff {
    pub q: SignalId,
    pub d: SignalId,
}

/// How a signal gets its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Driver {
    Input(usize),
    State(usize),
    Gate(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Netlist {
    pub name: String,
    signals: Vec<String>,
    lookup: HashMap<String, SignalId>,
    drivers: Vec<Driver>,
    pub inputs: Vec<SignalId>,
    pub outputs: Vec<SignalId>,
    pub gates: Vec<GateDef>,
    pub dffs: Vec<Dff>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetlistStats {
    pub inputs: usize,
    pub outputs: usize,
    pub gates: usize,
    pub dffs: usize,
}

impl Netlist {
    pub fn signal_count(&self) -> usize {
        self.signals.len()
    }

    pub fn signal_name(&self, id: SignalId) -> &str {
        &self.signals[id.index()]
    }

    pub fn signal_names(&self) -> impl Iterator<Item = &str> {
        self.signals.iter().map(String::as_str)
    }

    pub fn signal(&self, name: &str) -> Option<SignalId> {
        self.lookup.get(name).copied()
    }

    pub fn driver(&self, id: SignalId) -> Driver {
        self.drivers[id.index()]
    }

    /// Position of `id` among the primary outputs.
    pub fn output_position(&self, id: SignalId) -> Option<usize> {
        self.outputs.iter().position(|&o| o == id)
    }

    /// Gate count includes inverters and buffers; flip-flops are counted
    /// separately.
    pub fn stats(&self) -> NetlistStats {
        NetlistStats {
            inputs: self.inputs.len(),
            outputs: self.outputs.len(),
            gates: self.gates.len(),
            dffs: self.dffs.len(),
        }
    }

    /// Serialize back to `.bench` text. Parsing the result yields an equal
    /// netlist.
    pub fn to_bench(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# {}\n", self.name));
        // Emit definitions in signal order so re-parsing assigns the same ids.
        for (idx, driver) in self.drivers.iter().enumerate() {
            let name = &self.signals[idx];
            match *driver {
                Driver::Input(_) => out.push_str(&format!("INPUT({name})\n")),
                Driver::State(k) => {
                    let d = self.signal_name(self.dffs[k].d);
                    out.push_str(&format!("{name} = DFF({d})\n"));
                }
                Driver::Gate(g) => {
                    let gate = &self.gates[g];
                    let args: Vec<&str> = gate.fanin.iter().map(|&s| self.signal_name(s)).collect();
                    out.push_str(&format!("{name} = {}({})\n", gate.kind, args.join(", ")));
                }
            }
        }
        for &o in &self.outputs {
            out.push_str(&format!("OUTPUT({})\n", self.signal_name(o)));
        }
        out
    }
}

pub fn netlist_stats(nl: &Netlist) -> NetlistStats {
    nl.stats()
}

enum Def<'a> {
    Input,
    Dff(&'a str),
    Gate(GateKind, Vec<&'a str>),
}

/// Parse `.bench` text. The netlist is named `"netlist"`; use
/// [`parse_bench_named`] to set a name.
pub fn parse_bench(text: &str) -> Result<Netlist, ParseError> {
    parse_bench_named("netlist", text)
}

pub fn parse_bench_named(name: &str, text: &str) -> Result<Netlist, ParseError> {
    // First pass: collect definitions in declaration order.
    let mut defs: Vec<(&str, Def, usize)> = Vec::new();
    let mut outputs: Vec<(&str, usize)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }

        if let Some(eq) = line.find('=') {
            let lhs = line[..eq].trim();
            if !is_identifier(lhs) {
                return Err(ParseError::MalformedLine(lineno));
            }
            let (op, args) = split_call(line[eq + 1..].trim()).ok_or(ParseError::MalformedLine(lineno))?;
            if op.eq_ignore_ascii_case("DFF") {
                if args.len() != 1 {
                    return Err(ParseError::MalformedLine(lineno));
                }
                defs.push((lhs, Def::Dff(args[0]), lineno));
                continue;
            }
            let kind = GateKind::from_keyword(op).ok_or_else(|| ParseError::UnsupportedGate(op.to_string()))?;
            if !kind.accepts_arity(args.len()) {
                return Err(match kind {
                    GateKind::Xor | GateKind::Xnor if args.len() > 2 => {
                        ParseError::UnsupportedGate(format!("{}{}", kind, args.len()))
                    }
                    _ => ParseError::MalformedLine(lineno),
                });
            }
            defs.push((lhs, Def::Gate(kind, args), lineno));
        } else {
            let (kw, args) = split_call(line).ok_or(ParseError::MalformedLine(lineno))?;
            if args.len() != 1 {
                return Err(ParseError::MalformedLine(lineno));
            }
            if kw.eq_ignore_ascii_case("INPUT") {
                defs.push((args[0], Def::Input, lineno));
            } else if kw.eq_ignore_ascii_case("OUTPUT") {
                outputs.push((args[0], lineno));
            } else {
                return Err(ParseError::MalformedLine(lineno));
            }
        }
    }

    let mut lookup: HashMap<String, SignalId> = HashMap::with_capacity(defs.len());
    let mut signals = Vec::with_capacity(defs.len());
    for (sig, _, _) in &defs {
        let id = SignalId(signals.len() as u32);
        if lookup.insert(sig.to_string(), id).is_some() {
            return Err(ParseError::DuplicateDefinition(sig.to_string()));
        }
        signals.push(sig.to_string());
    }

    let resolve = |s: &str| {
        lookup
            .get(s)
            .copied()
            .ok_or_else(|| ParseError::UndefinedSignal(s.to_string()))
    };

    let mut inputs = Vec::new();
    let mut gates = Vec::new();
    let mut dffs = Vec::new();
    let mut drivers = Vec::with_capacity(defs.len());
    for (i, (_, def, _)) in defs.iter().enumerate() {
        let id = SignalId(i as u32);
        match def {
            Def::Input => {
                drivers.push(Driver::Input(inputs.len()));
                inputs.push(id);
            }
            Def::Dff(d) => {
                drivers.push(Driver::State(dffs.len()));
                dffs.push(Dff { q: id, d: resolve(d)? });
            }
            Def::Gate(kind, args) => {
                let fanin = args.iter().map(|a| resolve(a)).collect::<Result<Vec<_>, _>>()?;
                drivers.push(Driver::Gate(gates.len()));
                gates.push(GateDef {
                    output: id,
                    kind: *kind,
                    fanin,
                });
            }
        }
    }

    let mut outs = Vec::with_capacity(outputs.len());
    for (o, _) in outputs {
        let id = resolve(o)?;
        if outs.contains(&id) {
            return Err(ParseError::DuplicateDefinition(o.to_string()));
        }
        outs.push(id);
    }

    if inputs.is_empty() {
        return Err(ParseError::EmptyNetlist);
    }

    Ok(Netlist {
        name: name.to_string(),
        signals,
        lookup,
        drivers,
        inputs,
        outputs: outs,
        gates,
        dffs,
    })
}

fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && !s
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '(' | ')' | ',' | '=' | '#'))
}

/// Split `OP(a, b, c)` into the operator and its argument list.
fn split_call(s: &str) -> Option<(&str, Vec<&str>)> {
    let open = s.find('(')?;
    if !s.ends_with(')') {
        return None;
    }
    let op = s[..open].trim();
    if !is_identifier(op) {
        return None;
    }
    let inner = &s[open + 1..s.len() - 1];
    let args: Vec<&str> = inner.split(',').map(str::trim).collect();
    if args.iter().any(|a| !is_identifier(a)) {
        return None;
    }
    Some((op, args))
}
