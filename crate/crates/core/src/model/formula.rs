use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{GeneSet, State};
use crate::error::{Error, Result};

/// A read-once monotone formula over gene indices.
///
/// Values are kept in canonical form: operator nodes have at least two
/// operands, never have an operand with the same operator (associativity
/// is flattened), and operands are sorted by their smallest gene index.
/// Each gene occurs at most once. Two canonical formulas are equal iff
/// they denote the same Boolean function.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MonotoneFormula {
    Gene(usize),
    And(Vec<MonotoneFormula>),
    Or(Vec<MonotoneFormula>),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) enum Op {
    And,
    Or,
}

impl MonotoneFormula {
    pub fn gene(i: usize) -> Self {
        MonotoneFormula::Gene(i)
    }

    pub fn and(operands: Vec<MonotoneFormula>) -> Result<Self> {
        Self::build(Op::And, operands)
    }

    pub fn or(operands: Vec<MonotoneFormula>) -> Result<Self> {
        Self::build(Op::Or, operands)
    }

    pub(crate) fn build(op: Op, operands: Vec<MonotoneFormula>) -> Result<Self> {
        let mut flat = Vec::with_capacity(operands.len());
        for f in operands {
            match (op, f) {
                (Op::And, MonotoneFormula::And(cs)) | (Op::Or, MonotoneFormula::Or(cs)) => {
                    flat.extend(cs)
                }
                (_, f) => flat.push(f),
            }
        }
        let f = match flat.len() {
            0 => return Err(Error::Formula("operator without operands".into())),
            1 => flat.pop().unwrap(),
            _ => {
                flat.sort_by_key(|c| c.min_gene());
                match op {
                    Op::And => MonotoneFormula::And(flat),
                    Op::Or => MonotoneFormula::Or(flat),
                }
            }
        };
        f.check_read_once()?;
        Ok(f)
    }

    fn check_read_once(&self) -> Result<()> {
        let mut genes = self.genes();
        let n = genes.len();
        genes.dedup();
        if genes.len() != n {
            return Err(Error::Formula(
                "a gene may appear at most once per formula".into(),
            ));
        }
        Ok(())
    }

    /// Sorted gene indices occurring in the formula.
    pub fn genes(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out.sort_unstable();
        out
    }

    fn collect(&self, out: &mut Vec<usize>) {
        match self {
            MonotoneFormula::Gene(g) => out.push(*g),
            MonotoneFormula::And(cs) | MonotoneFormula::Or(cs) => {
                cs.iter().for_each(|c| c.collect(out))
            }
        }
    }

    pub fn min_gene(&self) -> usize {
        match self {
            MonotoneFormula::Gene(g) => *g,
            // canonical: first operand holds the minimum
            MonotoneFormula::And(cs) | MonotoneFormula::Or(cs) => cs[0].min_gene(),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            MonotoneFormula::Gene(_) => 1,
            MonotoneFormula::And(cs) | MonotoneFormula::Or(cs) => {
                cs.iter().map(|c| c.leaf_count()).sum()
            }
        }
    }

    /// Bit mask of the genes read by the formula.
    pub fn support_mask(&self) -> u64 {
        self.genes().iter().fold(0, |m, g| m | 1 << g)
    }

    pub fn eval(&self, s: State) -> bool {
        match self {
            MonotoneFormula::Gene(g) => s.get(*g),
            MonotoneFormula::And(cs) => cs.iter().all(|c| c.eval(s)),
            MonotoneFormula::Or(cs) => cs.iter().any(|c| c.eval(s)),
        }
    }

    pub fn check_width(&self, width: usize) -> Result<()> {
        match self.genes().last() {
            Some(&g) if g >= width => Err(Error::GeneOutOfRange { index: g, width }),
            _ => Ok(()),
        }
    }

    /// Text form: `gene` or `(term op term)` with `op` one of `&`, `|`;
    /// n-ary operators print right-nested.
    pub fn display(&self, genes: &GeneSet) -> String {
        let mut s = String::new();
        self.write(genes, &mut s);
        s
    }

    fn write(&self, genes: &GeneSet, out: &mut String) {
        match self {
            MonotoneFormula::Gene(g) => out.push_str(genes.name(*g)),
            MonotoneFormula::And(cs) => write_chain(cs, " & ", genes, out),
            MonotoneFormula::Or(cs) => write_chain(cs, " | ", genes, out),
        }
    }

    pub fn parse(text: &str, genes: &GeneSet) -> Result<Self> {
        let mut p = Parser::new(text, genes)?;
        let f = p.chain(false)?.into_formula()?;
        p.expect_end()?;
        Ok(f)
    }
}

fn write_chain(cs: &[MonotoneFormula], op: &str, genes: &GeneSet, out: &mut String) {
    let (head, rest) = cs.split_first().unwrap();
    out.push('(');
    head.write(genes, out);
    out.push_str(op);
    if rest.len() == 1 {
        rest[0].write(genes, out);
    } else {
        let tail = match op {
            " & " => MonotoneFormula::And(rest.to_vec()),
            _ => MonotoneFormula::Or(rest.to_vec()),
        };
        tail.write(genes, out);
    }
    out.push(')');
}

impl PartialOrd for MonotoneFormula {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MonotoneFormula {
    fn cmp(&self, other: &Self) -> Ordering {
        fn rank(f: &MonotoneFormula) -> u8 {
            match f {
                MonotoneFormula::Gene(_) => 0,
                MonotoneFormula::And(_) => 1,
                MonotoneFormula::Or(_) => 2,
            }
        }
        self.leaf_count()
            .cmp(&other.leaf_count())
            .then_with(|| rank(self).cmp(&rank(other)))
            .then_with(|| match (self, other) {
                (MonotoneFormula::Gene(a), MonotoneFormula::Gene(b)) => a.cmp(b),
                (MonotoneFormula::And(a), MonotoneFormula::And(b))
                | (MonotoneFormula::Or(a), MonotoneFormula::Or(b)) => a.cmp(b),
                _ => Ordering::Equal,
            })
    }
}

/// Update rule `f1 ∧ ¬f2` with monotone activator formula `f1` and optional
/// monotone repressor formula `f2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UpdateFunction {
    activators: MonotoneFormula,
    repressors: Option<MonotoneFormula>,
}

impl UpdateFunction {
    pub fn new(activators: MonotoneFormula, repressors: Option<MonotoneFormula>) -> Self {
        UpdateFunction {
            activators,
            repressors,
        }
    }

    pub fn activators(&self) -> &MonotoneFormula {
        &self.activators
    }

    pub fn repressors(&self) -> Option<&MonotoneFormula> {
        self.repressors.as_ref()
    }

    pub fn evaluate(&self, s: State) -> bool {
        self.activators.eval(s) && !self.repressors.as_ref().is_some_and(|r| r.eval(s))
    }

    /// True iff applying the function changes gene `i` at `s`.
    pub fn is_enabled(&self, i: usize, s: State) -> bool {
        self.evaluate(s) != s.get(i)
    }

    pub fn check_width(&self, width: usize) -> Result<()> {
        self.activators.check_width(width)?;
        if let Some(r) = &self.repressors {
            r.check_width(width)?;
        }
        Ok(())
    }

    pub fn support_mask(&self) -> u64 {
        self.activators.support_mask() | self.repressors.as_ref().map_or(0, |r| r.support_mask())
    }

    /// `term` or `term & !(term)`.
    pub fn display(&self, genes: &GeneSet) -> String {
        let mut s = self.activators.display(genes);
        if let Some(r) = &self.repressors {
            let _ = write!(s, " & !({})", r.display(genes));
        }
        s
    }

    /// Parses the printed form. Also accepts unparenthesised chains of a
    /// single operator (`a | b | c`) and `a & b & !(c)`.
    pub fn parse(text: &str, genes: &GeneSet) -> Result<Self> {
        let mut p = Parser::new(text, genes)?;
        let chain = p.chain(true)?;
        p.expect_end()?;
        let (act, rep) = chain.split_negation()?;
        Ok(UpdateFunction::new(act, rep))
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    And,
    Or,
    Not,
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    text: &'a str,
    genes: &'a GeneSet,
}

struct Chain {
    op: Option<Op>,
    items: Vec<MonotoneFormula>,
    negated: Option<MonotoneFormula>,
}

impl Chain {
    fn into_formula(self) -> Result<MonotoneFormula> {
        if self.negated.is_some() {
            return Err(Error::Formula("negation is only allowed at the top level".into()));
        }
        match self.op {
            None => Ok(self.items.into_iter().next().unwrap()),
            Some(op) => MonotoneFormula::build(op, self.items),
        }
    }

    fn split_negation(mut self) -> Result<(MonotoneFormula, Option<MonotoneFormula>)> {
        let neg = self.negated.take();
        if self.items.is_empty() {
            return Err(Error::Formula(
                "an update function needs at least one activator".into(),
            ));
        }
        if neg.is_some() && self.op != Some(Op::And) {
            return Err(Error::Formula("repressors must be joined with `&`".into()));
        }
        let act = match self.op {
            Some(op) if self.items.len() > 1 => MonotoneFormula::build(op, self.items)?,
            _ => self.items.pop().unwrap(),
        };
        Ok((act, neg))
    }
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, genes: &'a GeneSet) -> Result<Self> {
        let mut toks = Vec::new();
        let cs: Vec<(usize, char)> = text.char_indices().collect();
        let mut k = 0;
        while k < cs.len() {
            let (at, c) = cs[k];
            match c {
                c if c.is_whitespace() => {}
                '(' => toks.push((at, Tok::LParen)),
                ')' => toks.push((at, Tok::RParen)),
                '&' => toks.push((at, Tok::And)),
                '|' => toks.push((at, Tok::Or)),
                '!' => toks.push((at, Tok::Not)),
                c if is_ident_char(c) => {
                    let start = k;
                    while k + 1 < cs.len() && is_ident_char(cs[k + 1].1) {
                        k += 1;
                    }
                    let end = cs.get(k + 1).map_or(text.len(), |x| x.0);
                    toks.push((cs[start].0, Tok::Ident(text[at..end].to_string())));
                }
                other => {
                    return Err(Error::Parse {
                        location: format!("column {}", at + 1),
                        message: format!("unexpected character `{other}` in `{text}`"),
                    })
                }
            }
            k += 1;
        }
        Ok(Parser {
            toks,
            pos: 0,
            text,
            genes,
        })
    }

    fn err(&self, message: &str) -> Error {
        let col = self.toks.get(self.pos).map_or(self.text.len(), |t| t.0) + 1;
        Error::Parse {
            location: format!("column {col}"),
            message: format!("{message} in `{}`", self.text),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.1.clone());
        self.pos += 1;
        t
    }

    fn expect_end(&self) -> Result<()> {
        if self.pos < self.toks.len() {
            Err(self.err("trailing input"))
        } else {
            Ok(())
        }
    }

    fn chain(&mut self, allow_not: bool) -> Result<Chain> {
        let mut chain = Chain {
            op: None,
            items: Vec::new(),
            negated: None,
        };
        loop {
            if chain.negated.is_some() {
                return Err(self.err("the negated repressor term must come last"));
            }
            if self.peek() == Some(&Tok::Not) {
                if !allow_not {
                    return Err(self.err("unexpected `!`"));
                }
                self.next();
                chain.negated = Some(self.atom()?);
            } else {
                let a = self.atom()?;
                chain.items.push(a);
            }
            let op = match self.peek() {
                Some(Tok::And) => Op::And,
                Some(Tok::Or) => Op::Or,
                _ => break,
            };
            match chain.op {
                None => chain.op = Some(op),
                Some(o) if o != op => {
                    return Err(self.err("mixed operators need parentheses"));
                }
                _ => {}
            }
            self.next();
        }
        Ok(chain)
    }

    fn atom(&mut self) -> Result<MonotoneFormula> {
        match self.next() {
            Some(Tok::Ident(name)) => {
                let i = self.genes.index_of(&name)?;
                Ok(MonotoneFormula::Gene(i))
            }
            Some(Tok::LParen) => {
                let c = self.chain(false)?;
                if self.next() != Some(Tok::RParen) {
                    self.pos -= 1;
                    return Err(self.err("expected `)`"));
                }
                c.into_formula()
            }
            _ => {
                self.pos -= 1;
                Err(self.err("expected a gene or `(`"))
            }
        }
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '.' | '-' | ':' | '/')
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cmp_genes() -> GeneSet {
        GeneSet::new([
            "Gata2", "Gata1", "Fog1", "EKLF", "Fli1", "Scl", "Cebpa", "Pu.1", "cJun", "EgrNab",
            "Gfi1",
        ])
        .unwrap()
    }

    #[test]
    fn canonicalises_commutative_and_associative_variants() {
        let g = cmp_genes();
        let a = UpdateFunction::parse("(Fli1 | (Gata1 | Gata2)) & !(Pu.1)", &g).unwrap();
        let b = UpdateFunction::parse("Gata2 | Fli1 | Gata1 & !(Pu.1)", &g);
        // `&` after an `|` chain is a mixed chain
        assert!(b.is_err());
        let c = UpdateFunction::parse("((Gata1 | Gata2) | Fli1) & !(Pu.1)", &g).unwrap();
        assert_eq!(a, c);
        assert_eq!(a.display(&g), "(Gata2 | (Gata1 | Fli1)) & !(Pu.1)");
    }

    #[test]
    fn prints_the_grammar_form() {
        let g = cmp_genes();
        let f = UpdateFunction::parse("Gata2 & !(Pu.1 | (Gata1 & Fog1))", &g).unwrap();
        assert_eq!(f.display(&g), "Gata2 & !(((Gata1 & Fog1) | Pu.1))");
        let again = UpdateFunction::parse(&f.display(&g), &g).unwrap();
        assert_eq!(again, f);
    }

    #[test]
    fn rejects_repeated_gene_and_pure_repressor() {
        let g = cmp_genes();
        assert!(UpdateFunction::parse("(Gata1 & Gata1)", &g).is_err());
        assert!(UpdateFunction::parse("!(Gata1)", &g).is_err());
        assert!(UpdateFunction::parse("Gata1 & !(Nope)", &g).is_err());
        // the same gene on both sides is allowed
        assert!(UpdateFunction::parse("Gata2 & !(Gata2 & Pu.1)", &g).is_ok());
    }

    #[test]
    fn evaluate_and_enabledness() {
        let g = cmp_genes();
        let gata1 = g.index_of("Gata1").unwrap();
        let fli1 = g.index_of("Fli1").unwrap();
        let fog1 = g.index_of("Fog1").unwrap();
        let fog1_rule = UpdateFunction::parse("Gata1", &g).unwrap();
        let eklf_rule = UpdateFunction::parse("Gata1 & !(Fli1)", &g).unwrap();
        let s = State::default().with(gata1, true);
        assert!(fog1_rule.evaluate(s));
        assert!(fog1_rule.is_enabled(fog1, s));
        assert!(!fog1_rule.is_enabled(fog1, s.with(fog1, true)));
        assert!(!eklf_rule.evaluate(s.with(fli1, true)));
        let pu1 = UpdateFunction::parse("Gata1 & !(Pu.1)", &g).unwrap();
        assert!(!pu1.evaluate(State::default()));
        assert!(!pu1.is_enabled(gata1, State::default()));
    }

    #[test]
    fn width_check() {
        let f = UpdateFunction::new(MonotoneFormula::gene(5), None);
        assert!(matches!(
            f.check_width(3),
            Err(Error::GeneOutOfRange { index: 5, width: 3 })
        ));
    }
}
