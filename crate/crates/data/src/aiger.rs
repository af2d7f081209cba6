//! ASCII AIGER (`aag`) reading, writing, generation, and simulation.
//!
//! Combinational graphs only: latch declarations and the constant literals
//! `0`/`1` are rejected up front.

use crate::DataError;
use logicforge_core::TruthTable;
use rand::Rng;
use std::collections::HashMap;

/// An AIGER literal: variable index times two, plus one when negated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Literal(pub usize);

impl Literal {
    pub fn from_var(var: usize, negated: bool) -> Literal {
        Literal(var * 2 + usize::from(negated))
    }

    pub fn var(self) -> usize {
        self.0 >> 1
    }

    pub fn is_negated(self) -> bool {
        self.0 & 1 == 1
    }

    /// The same variable with the opposite polarity.
    pub fn negate(self) -> Literal {
        Literal(self.0 ^ 1)
    }
}

/// One two-input and gate: `lhs = rhs0 & rhs1`.
#[derive(Clone, Copy, Debug)]
pub struct AndGate {
    pub lhs: Literal,
    pub rhs0: Literal,
    pub rhs1: Literal,
}

/// A combinational and-inverter graph.
#[derive(Clone, Debug)]
pub struct Aig {
    pub max_var: usize,
    pub inputs: Vec<Literal>,
    pub outputs: Vec<Literal>,
    pub ands: Vec<AndGate>,
}

impl Aig {
    pub fn num_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    /// And gates reordered so every gate follows its gate operands.
    pub fn topo_ands(&self) -> Result<Vec<usize>, DataError> {
        let lhs_index: HashMap<usize, usize> = self
            .ands
            .iter()
            .enumerate()
            .map(|(i, g)| (g.lhs.var(), i))
            .collect();
        let mut indegree = vec![0usize; self.ands.len()];
        let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); self.ands.len()];
        for (i, gate) in self.ands.iter().enumerate() {
            for rhs in [gate.rhs0, gate.rhs1] {
                if let Some(&j) = lhs_index.get(&rhs.var()) {
                    indegree[i] += 1;
                    dependents[j].push(i);
                }
            }
        }
        let mut ready: Vec<usize> = (0..self.ands.len()).filter(|&i| indegree[i] == 0).collect();
        ready.reverse();
        let mut order = Vec::with_capacity(self.ands.len());
        while let Some(i) = ready.pop() {
            order.push(i);
            for &d in &dependents[i] {
                indegree[d] -= 1;
                if indegree[d] == 0 {
                    ready.push(d);
                }
            }
        }
        if order.len() != self.ands.len() {
            return Err(DataError::Cyclic);
        }
        Ok(order)
    }

    /// Exhaustive evaluation; row `r` assigns input `k` the bit `(r >> k) & 1`.
    pub fn truth_table(&self) -> Result<TruthTable, DataError> {
        let order = self.topo_ands()?;
        let mut table = TruthTable::new_zeroed(self.num_inputs(), self.num_outputs())?;
        let mut values: HashMap<usize, bool> = HashMap::new();
        for row in 0..table.num_rows() {
            values.clear();
            for (k, input) in self.inputs.iter().enumerate() {
                values.insert(input.var(), (row >> k) & 1 == 1);
            }
            for &i in &order {
                let gate = &self.ands[i];
                let a = read_literal(&values, gate.rhs0)?;
                let b = read_literal(&values, gate.rhs1)?;
                values.insert(gate.lhs.var(), a && b);
            }
            for (o, &output) in self.outputs.iter().enumerate() {
                table.set_bit(o, row, read_literal(&values, output)?);
            }
        }
        Ok(table)
    }
}

fn read_literal(values: &HashMap<usize, bool>, lit: Literal) -> Result<bool, DataError> {
    let v = *values
        .get(&lit.var())
        .ok_or(DataError::Undefined { var: lit.var() })?;
    Ok(v != lit.is_negated())
}

fn parse_number(token: &str, line: usize, what: &str) -> Result<usize, DataError> {
    token
        .parse()
        .map_err(|_| DataError::parse(line, format!("{what} `{token}` is not a number")))
}

fn check_literal(lit: usize, max_var: usize, line: usize) -> Result<Literal, DataError> {
    if lit < 2 {
        return Err(DataError::ConstantLiteral { line, literal: lit });
    }
    let literal = Literal(lit);
    if literal.var() > max_var {
        return Err(DataError::parse(
            line,
            format!("literal {lit} exceeds the declared maximum variable {max_var}"),
        ));
    }
    Ok(literal)
}

/// Parse the ASCII AIGER format. Symbol and comment sections are ignored.
pub fn parse_aag(text: &str) -> Result<Aig, DataError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (header_line, header) = lines
        .by_ref()
        .find(|(_, l)| !l.is_empty())
        .ok_or_else(|| DataError::parse(1, "empty file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 6 || fields[0] != "aag" {
        return Err(DataError::parse(
            header_line,
            format!("expected `aag M I L O A`, got `{header}`"),
        ));
    }
    let max_var = parse_number(fields[1], header_line, "maximum variable")?;
    let num_inputs = parse_number(fields[2], header_line, "input count")?;
    let num_latches = parse_number(fields[3], header_line, "latch count")?;
    let num_outputs = parse_number(fields[4], header_line, "output count")?;
    let num_ands = parse_number(fields[5], header_line, "and count")?;
    if num_latches > 0 {
        return Err(DataError::Latches { count: num_latches });
    }

    let mut next = |what: &str| -> Result<(usize, Vec<usize>), DataError> {
        let (line, text) = lines
            .by_ref()
            .find(|(_, l)| !l.is_empty())
            .ok_or_else(|| DataError::parse(0, format!("missing {what} line")))?;
        let nums = text
            .split_whitespace()
            .map(|t| parse_number(t, line, what))
            .collect::<Result<Vec<usize>, DataError>>()?;
        Ok((line, nums))
    };

    let mut inputs = Vec::with_capacity(num_inputs);
    let mut defined: HashMap<usize, usize> = HashMap::new(); // var -> defining line
    for _ in 0..num_inputs {
        let (line, nums) = next("input")?;
        if nums.len() != 1 {
            return Err(DataError::parse(line, "expected a single input literal"));
        }
        let lit = check_literal(nums[0], max_var, line)?;
        if lit.is_negated() {
            return Err(DataError::parse(line, format!("input literal {} is negated", nums[0])));
        }
        if defined.insert(lit.var(), line).is_some() {
            return Err(DataError::parse(line, format!("variable {} defined twice", lit.var())));
        }
        inputs.push(lit);
    }

    let mut outputs = Vec::with_capacity(num_outputs);
    for _ in 0..num_outputs {
        let (line, nums) = next("output")?;
        if nums.len() != 1 {
            return Err(DataError::parse(line, "expected a single output literal"));
        }
        outputs.push(check_literal(nums[0], max_var, line)?);
    }

    let mut ands = Vec::with_capacity(num_ands);
    for _ in 0..num_ands {
        let (line, nums) = next("and gate")?;
        if nums.len() != 3 {
            return Err(DataError::parse(line, "expected `lhs rhs0 rhs1`"));
        }
        let lhs = check_literal(nums[0], max_var, line)?;
        if lhs.is_negated() {
            return Err(DataError::parse(line, format!("and output {} is negated", nums[0])));
        }
        if defined.insert(lhs.var(), line).is_some() {
            return Err(DataError::parse(line, format!("variable {} defined twice", lhs.var())));
        }
        let rhs0 = check_literal(nums[1], max_var, line)?;
        let rhs1 = check_literal(nums[2], max_var, line)?;
        ands.push(AndGate { lhs, rhs0, rhs1 });
    }

    for gate in &ands {
        for rhs in [gate.rhs0, gate.rhs1] {
            if !defined.contains_key(&rhs.var()) {
                return Err(DataError::Undefined { var: rhs.var() });
            }
        }
    }
    for output in &outputs {
        if !defined.contains_key(&output.var()) {
            return Err(DataError::Undefined { var: output.var() });
        }
    }

    let aig = Aig { max_var, inputs, outputs, ands };
    aig.topo_ands()?; // reject cyclic definitions early
    Ok(aig)
}

/// Render in the ASCII AIGER format.
pub fn write_aag(aig: &Aig) -> String {
    let mut out = format!(
        "aag {} {} 0 {} {}\n",
        aig.max_var,
        aig.num_inputs(),
        aig.num_outputs(),
        aig.ands.len()
    );
    for input in &aig.inputs {
        out.push_str(&format!("{}\n", input.0));
    }
    for output in &aig.outputs {
        out.push_str(&format!("{}\n", output.0));
    }
    for gate in &aig.ands {
        out.push_str(&format!("{} {} {}\n", gate.lhs.0, gate.rhs0.0, gate.rhs1.0));
    }
    out
}

/// Size ranges for [`random_aig`].
#[derive(Clone, Debug)]
pub struct RandomAigSpec {
    pub inputs: (usize, usize),
    pub gates: (usize, usize),
    pub outputs: (usize, usize),
}

impl Default for RandomAigSpec {
    fn default() -> Self {
        Self { inputs: (3, 6), gates: (5, 20), outputs: (1, 2) }
    }
}

/// Draw a random combinational AIG with topologically ordered gates.
pub fn random_aig<R: Rng + ?Sized>(rng: &mut R, spec: &RandomAigSpec) -> Aig {
    let num_inputs = rng.gen_range(spec.inputs.0..=spec.inputs.1).max(1);
    let num_gates = rng.gen_range(spec.gates.0..=spec.gates.1);
    let num_outputs = rng.gen_range(spec.outputs.0..=spec.outputs.1).max(1);
    let inputs: Vec<Literal> = (1..=num_inputs).map(|v| Literal::from_var(v, false)).collect();
    let mut ands = Vec::with_capacity(num_gates);
    for g in 0..num_gates {
        let lhs_var = num_inputs + g + 1;
        let pick = |rng: &mut R| {
            let var = rng.gen_range(1..lhs_var);
            Literal::from_var(var, rng.gen_bool(0.5))
        };
        let rhs0 = pick(rng);
        let rhs1 = pick(rng);
        ands.push(AndGate { lhs: Literal::from_var(lhs_var, false), rhs0, rhs1 });
    }
    let max_var = num_inputs + num_gates;
    let outputs = (0..num_outputs)
        .map(|_| Literal::from_var(rng.gen_range(1..=max_var), rng.gen_bool(0.5)))
        .collect();
    Aig { max_var, inputs, outputs, ands }
}

#[cfg(test)]
mod tests {
    use super::*;
    use logicforge_core::seed::stream_rng;

    /// Full adder built from two xor ladders and a majority:
    /// vars 4-6 form a xor b, 7-9 extend it with c, 10-12 form the carry.
    const FULL_ADDER: &str = "\
aag 12 3 0 2 9
2
4
6
19
25
8 2 5
10 3 4
12 9 11
14 13 7
16 12 6
18 15 17
20 2 4
22 6 13
24 21 23
";

    #[test]
    fn full_adder_parses_and_simulates() {
        let aig = parse_aag(FULL_ADDER).unwrap();
        assert_eq!(aig.num_inputs(), 3);
        assert_eq!(aig.num_outputs(), 2);
        assert_eq!(aig.ands.len(), 9);
        let table = aig.truth_table().unwrap();
        for row in 0..8 {
            let a = row & 1;
            let b = (row >> 1) & 1;
            let c = (row >> 2) & 1;
            let sum = (a + b + c) & 1 == 1;
            let carry = a + b + c >= 2;
            assert_eq!(table.bit(0, row), sum, "sum row {row}");
            assert_eq!(table.bit(1, row), carry, "carry row {row}");
        }
    }

    #[test]
    fn latches_are_rejected() {
        let text = "aag 2 1 1 1 0\n2\n4 2\n4\n";
        match parse_aag(text) {
            Err(DataError::Latches { count: 1 }) => {}
            other => panic!("expected a latch rejection, got {other:?}"),
        }
    }

    #[test]
    fn constant_literals_are_rejected() {
        let text = "aag 2 1 0 1 1\n2\n4\n4 2 1\n";
        match parse_aag(text) {
            Err(DataError::ConstantLiteral { literal: 1, .. }) => {}
            other => panic!("expected a constant rejection, got {other:?}"),
        }
    }

    #[test]
    fn undefined_variables_are_rejected() {
        let text = "aag 9 1 0 1 1\n2\n4\n4 2 18\n";
        match parse_aag(text) {
            Err(DataError::Undefined { var: 9 }) => {}
            other => panic!("expected an undefined-variable error, got {other:?}"),
        }
    }

    #[test]
    fn cyclic_definitions_are_rejected() {
        let text = "aag 3 1 0 1 2\n2\n4\n4 6 2\n6 4 2\n";
        match parse_aag(text) {
            Err(DataError::Cyclic) => {}
            other => panic!("expected a cycle error, got {other:?}"),
        }
    }

    #[test]
    fn write_then_parse_round_trips() {
        let mut rng = stream_rng(3, "aiger-roundtrip");
        for _ in 0..20 {
            let aig = random_aig(&mut rng, &RandomAigSpec::default());
            let text = write_aag(&aig);
            let back = parse_aag(&text).unwrap();
            assert_eq!(back.max_var, aig.max_var);
            assert_eq!(back.inputs, aig.inputs);
            assert_eq!(back.outputs, aig.outputs);
            let a = aig.truth_table().unwrap();
            let b = back.truth_table().unwrap();
            assert_eq!(a, b, "round trip must preserve behaviour");
        }
    }

    #[test]
    fn out_of_order_definitions_still_simulate() {
        // Gate 8 references gate 10, defined later in the file.
        let text = "aag 5 2 0 1 2\n2\n4\n8\n8 10 2\n10 2 4\n";
        let aig = parse_aag(text).unwrap();
        let table = aig.truth_table().unwrap();
        // 10 = a & b, 8 = 10 & a = a & b.
        for row in 0..4 {
            let a = row & 1 == 1;
            let b = row >> 1 & 1 == 1;
            assert_eq!(table.bit(0, row), a && b);
        }
    }
}
