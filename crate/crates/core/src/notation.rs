//! Textual lattice descriptions used on the command line.
//!
//! Grammar: `term ('+' term)*` with
//! `term := "Z:" n | "D:" n | "D+:" n | "E8" | "GAMMA16"`.
//! `E8` is `D+:8` and `GAMMA16` is `D+:16`; `A+B` is the orthogonal direct sum.

use crate::error::{Error, Result};
use crate::lattice::{self, LatticeBasis};

pub fn parse_lattice(input: &str) -> Result<LatticeBasis> {
    let mut parser = Parser { input, pos: 0 };
    let mut acc = parser.term()?;
    while parser.pos < input.len() {
        parser.expect('+')?;
        let next = parser.term()?;
        acc = lattice::direct_sum(&acc, &next);
    }
    Ok(acc.with_label(input.trim()))
}

struct Parser<'a> {
    input: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn rest(&self) -> &str {
        &self.input[self.pos..]
    }

    fn token_here(&self) -> String {
        self.rest()
            .chars()
            .take_while(|&c| c != '+' || self.rest().starts_with("D+"))
            .take(12)
            .collect()
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(Error::parse(self.pos, self.token_here(), format!("expected '{c}'")))
        }
    }

    fn term(&mut self) -> Result<LatticeBasis> {
        let start = self.pos;
        let keywords: [(&str, fn(usize) -> Result<LatticeBasis>); 3] = [
            ("D+:", lattice::dn_plus),
            ("Z:", lattice::integer_lattice),
            ("D:", lattice::dn),
        ];
        for (prefix, build) in keywords {
            if self.rest().starts_with(prefix) {
                self.pos += prefix.len();
                let n = self.number()?;
                return build(n).map_err(|e| Error::parse(start, &self.input[start..self.pos], e.to_string()));
            }
        }
        for (alias, n) in [("GAMMA16", 16), ("E8", 8)] {
            if self.rest().starts_with(alias) {
                self.pos += alias.len();
                return Ok(lattice::dn_plus(n)?.with_label(alias));
            }
        }
        let token = self.token_here();
        let token = if token.is_empty() { "<end>".to_string() } else { token };
        Err(Error::parse(
            start,
            token,
            "expected one of Z:n, D:n, D+:n, E8, GAMMA16",
        ))
    }

    fn number(&mut self) -> Result<usize> {
        let digits: String = self.rest().chars().take_while(char::is_ascii_digit).collect();
        if digits.is_empty() {
            let token = self.token_here();
            return Err(Error::parse(self.pos, token, "expected a dimension"));
        }
        let start = self.pos;
        self.pos += digits.len();
        digits
            .parse()
            .map_err(|_| Error::parse(start, digits.clone(), "dimension out of range"))
    }
}
