#![allow(dead_code)]

use std::collections::BTreeSet;

use dlsuite::kb::{Assertion, Axiom, CBox, CardDir, CardRestriction, TBox};
use dlsuite::syntax::measure;
use dlsuite::{Concept, Role, RoleBox, RoleExpr};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shape of the random concepts drawn by [`Gen::concept`].
#[derive(Clone, Debug)]
pub struct Family {
    pub names: Vec<&'static str>,
    pub roles: Vec<Role>,
    pub nominals: Vec<&'static str>,
    pub max_count: u32,
    pub counting: bool,
    pub quantifiers: bool,
    pub max_depth: usize,
    /// Roles allowed under number restrictions; all roles when empty.
    pub simple: Vec<Role>,
}

impl Family {
    pub fn alc() -> Self {
        Family {
            names: vec!["A", "B", "C"],
            roles: vec![Role::new("R"), Role::new("S")],
            nominals: vec![],
            max_count: 0,
            counting: false,
            quantifiers: true,
            max_depth: 6,
            simple: vec![],
        }
    }

    pub fn alcq() -> Self {
        Family {
            max_count: 3,
            counting: true,
            max_depth: 2,
            ..Family::alc()
        }
    }

    pub fn si() -> Self {
        Family {
            roles: vec![Role::new("R"), Role::inverse_of("R"), Role::new("S"), Role::inverse_of("S")],
            max_depth: 4,
            ..Family::alc()
        }
    }

    pub fn shiq() -> Self {
        Family {
            max_count: 2,
            counting: true,
            ..Family::si()
        }
    }

    pub fn tiny() -> Self {
        Family {
            names: vec!["A", "B"],
            roles: vec![Role::new("R")],
            max_depth: 2,
            ..Family::alcq()
        }
    }
}

fn rsize(r: &RoleExpr) -> usize {
    match r.as_role() {
        Some(r) if r.inverted => 4,
        _ => 1,
    }
}

pub struct Gen {
    pub rng: ChaCha8Rng,
    pub fam: Family,
}

impl Gen {
    pub fn new(seed: u64, fam: Family) -> Self {
        Gen { rng: rng(seed), fam }
    }

    fn atom(&mut self) -> Concept {
        let k = self.rng.gen_range(0..20);
        if k == 0 {
            return Concept::Top;
        }
        if k == 1 {
            return Concept::Bottom;
        }
        if k < 4 && !self.fam.nominals.is_empty() {
            return Concept::nominal(self.fam.nominals.choose(&mut self.rng).unwrap());
        }
        Concept::name(self.fam.names.choose(&mut self.rng).unwrap())
    }

    fn role(&mut self, counted: bool) -> RoleExpr {
        let pool = if counted && !self.fam.simple.is_empty() { &self.fam.simple } else { &self.fam.roles };
        RoleExpr::Atom(pool.choose(&mut self.rng).unwrap().clone())
    }

    fn split(&mut self, n: usize) -> (usize, usize) {
        let a = self.rng.gen_range(1..n);
        (a, n - a)
    }

    /// A concept of token size at most `budget`.
    pub fn sized(&mut self, budget: usize, depth: usize) -> Concept {
        let q = self.fam.quantifiers && depth < self.fam.max_depth;
        let mut options = vec![];
        if budget < 5 {
            options.push(0);
        }
        if budget == 4 {
            options.push(1);
        }
        if budget >= 5 {
            options.extend([2, 3]);
        }
        if q && budget >= 5 {
            options.extend([4, 5, 4, 5]);
        }
        if q && self.fam.counting && budget >= 7 {
            options.extend([6, 7, 6, 7]);
        }
        match *options.choose(&mut self.rng).unwrap() {
            0 => self.atom(),
            1 => Concept::not(self.atom()),
            k @ (2 | 3) => {
                let (a, b) = self.split(budget - 3);
                let parts = vec![self.sized(a, depth), self.sized(b, depth)];
                if k == 2 {
                    Concept::And(parts)
                } else {
                    Concept::Or(parts)
                }
            }
            k @ (4 | 5) => {
                let r = self.role(false);
                let d = self.sized(budget.saturating_sub(3 + rsize(&r)).max(1), depth + 1);
                if k == 4 {
                    Concept::some(r, d)
                } else {
                    Concept::all(r, d)
                }
            }
            k => {
                let r = self.role(true);
                let d = self.sized(budget.saturating_sub(4 + rsize(&r)).max(1), depth + 1);
                let n = self.rng.gen_range(0..=self.fam.max_count);
                if k == 6 {
                    Concept::at_least(n, r, d)
                } else {
                    Concept::at_most(n, r, d)
                }
            }
        }
    }

    /// A concept of token size at most `max`, by rejection. Budgets are drawn
    /// from the upper half of the range.
    pub fn concept(&mut self, max: usize) -> Concept {
        loop {
            let b = self.rng.gen_range(max.div_ceil(2)..=max);
            let c = self.sized(b, 0);
            if measure(&c).size <= max {
                return c;
            }
        }
    }

    /// A role box over the family's role names: some names transitive, and a
    /// few inclusions. Simple roles are recorded in the family.
    pub fn rbox(&mut self, inclusions: bool) -> RoleBox {
        let mut rb = RoleBox::new();
        let names: BTreeSet<String> = self.fam.roles.iter().map(|r| r.base.clone()).collect();
        for n in &names {
            if self.rng.gen_bool(0.5) {
                rb.add_transitive(n.as_str());
            }
        }
        if inclusions {
            let roles = self.fam.roles.clone();
            for _ in 0..self.rng.gen_range(0..=2) {
                let a = roles.choose(&mut self.rng).unwrap().clone();
                let b = roles.choose(&mut self.rng).unwrap().clone();
                if a.base != b.base {
                    rb.add_inclusion(a, b);
                }
            }
        }
        self.fam.simple = self.fam.roles.iter().filter(|r| rb.is_simple(r)).cloned().collect();
        if self.fam.simple.is_empty() {
            self.fam.counting = false;
        }
        rb
    }

    pub fn tbox(&mut self, axioms: usize, size: usize) -> TBox {
        let mut t = TBox::default();
        for _ in 0..axioms {
            let l = self.concept(size);
            let r = self.concept(size);
            t.axioms.push(Axiom::sub(l, r));
        }
        t
    }

    pub fn cbox(&mut self, n: usize, size: usize) -> CBox {
        let mut cb = CBox::default();
        for _ in 0..n {
            let dir = if self.rng.gen_bool(0.5) { CardDir::AtLeast } else { CardDir::AtMost };
            cb.restrictions.push(CardRestriction {
                dir,
                count: self.rng.gen_range(0..=2u32).into(),
                concept: self.concept(size),
            });
        }
        cb
    }

    pub fn abox(&mut self, individuals: &[&str], n: usize, size: usize) -> Vec<Assertion> {
        let mut out = Vec::new();
        for _ in 0..n {
            let x = individuals.choose(&mut self.rng).unwrap().to_string();
            let y = individuals.choose(&mut self.rng).unwrap().to_string();
            out.push(match self.rng.gen_range(0..4) {
                0 | 1 => Assertion::Instance(x, self.concept(size)),
                2 => {
                    let r = self.fam.roles.choose(&mut self.rng).unwrap().clone();
                    Assertion::Related(x, y, r)
                }
                _ if x != y => Assertion::Distinct(x, y),
                _ => Assertion::Instance(x, self.concept(size)),
            });
        }
        out
    }
}
