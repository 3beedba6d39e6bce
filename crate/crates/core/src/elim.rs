//! Incremental Gauss-Jordan elimination over sparse linear equations.
//!
//! This is the engine shared by the streaming decoder and the recoverability
//! oracle. Equations arrive one at a time; each is reduced against the current
//! pivot rows, installed with its smallest remaining variable as pivot, and
//! that pivot is then eliminated from every other stored row. The system is
//! therefore always in reduced row echelon form, which gives the key property
//! both callers rely on: a variable is uniquely determined by the equations
//! seen so far if and only if it has been reported resolved.
//!
//! Variables can be retired; every equation still touching a retired variable
//! is dropped wholesale rather than partially reused.

use std::collections::hash_map::Entry;
use std::collections::{HashMap, HashSet};

use crate::gf::{Fe, Field};

/// Variable identifier. Callers encode their own structure into it.
pub(crate) type Var = u64;

struct Row {
    /// Sorted by variable; after installation `coeffs[0]` is the pivot with
    /// coefficient 1.
    coeffs: Vec<(Var, Fe)>,
    rhs: Fe,
}

pub(crate) struct Eliminator {
    field: Field,
    rows: Vec<Option<Row>>,
    free_slots: Vec<usize>,
    /// pivot variable -> row holding it
    pivot_row: HashMap<Var, usize>,
    /// variable -> rows where it occurs as a non-pivot entry
    occurs: HashMap<Var, HashSet<usize>>,
    resolved: HashMap<Var, Fe>,
    events: Vec<(Var, Fe)>,
    inconsistent: usize,
}

impl Eliminator {
    pub fn new(field: Field) -> Eliminator {
        Eliminator {
            field,
            rows: Vec::new(),
            free_slots: Vec::new(),
            pivot_row: HashMap::new(),
            occurs: HashMap::new(),
            resolved: HashMap::new(),
            events: Vec::new(),
            inconsistent: 0,
        }
    }

    #[cfg(test)]
    pub fn resolved_value(&self, v: Var) -> Option<Fe> {
        self.resolved.get(&v).copied()
    }

    pub fn is_resolved(&self, v: Var) -> bool {
        self.resolved.contains_key(&v)
    }

    /// Drains resolution events in the order they occurred.
    pub fn take_events(&mut self) -> Vec<(Var, Fe)> {
        std::mem::take(&mut self.events)
    }

    /// Number of equations that reduced to 0 = nonzero. Stays 0 for any
    /// consistent system (an honest encoder can never produce one).
    pub fn inconsistencies(&self) -> usize {
        self.inconsistent
    }

    /// Count of stored (not yet resolving) equations; used by tests.
    #[cfg(test)]
    pub fn active_rows(&self) -> usize {
        self.rows.iter().flatten().count()
    }

    /// dst -= factor * src over GF(2^m): merge of two sorted coefficient
    /// lists. Returns the merged list.
    fn merge(
        field: &Field,
        dst: &[(Var, Fe)],
        src: &[(Var, Fe)],
        factor: Fe,
    ) -> Vec<(Var, Fe)> {
        let mut out = Vec::with_capacity(dst.len() + src.len());
        let (mut i, mut j) = (0, 0);
        while i < dst.len() || j < src.len() {
            match (dst.get(i), src.get(j)) {
                (Some(&(dv, dc)), Some(&(sv, sc))) if dv == sv => {
                    let c = dc ^ field.mul(factor, sc);
                    if c != 0 {
                        out.push((dv, c));
                    }
                    i += 1;
                    j += 1;
                }
                (Some(&(dv, dc)), Some(&(sv, _))) if dv < sv => {
                    out.push((dv, dc));
                    i += 1;
                }
                (Some(_), Some(&(sv, sc))) => {
                    let c = field.mul(factor, sc);
                    if c != 0 {
                        out.push((sv, c));
                    }
                    j += 1;
                }
                (Some(&(dv, dc)), None) => {
                    out.push((dv, dc));
                    i += 1;
                }
                (None, Some(&(sv, sc))) => {
                    let c = field.mul(factor, sc);
                    if c != 0 {
                        out.push((sv, c));
                    }
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        out
    }

    /// Adds one equation sum(coeff * var) = rhs. Terms may arrive unsorted,
    /// duplicated, or referencing already-resolved variables; all of that is
    /// normalized here.
    pub fn add_equation(&mut self, terms: Vec<(Var, Fe)>, mut rhs: Fe) {
        // Normalize: sort, combine duplicates, substitute resolved values.
        let mut coeffs: Vec<(Var, Fe)> = Vec::with_capacity(terms.len());
        {
            let mut sorted = terms;
            sorted.sort_unstable_by_key(|&(v, _)| v);
            for (v, c) in sorted {
                if c == 0 {
                    continue;
                }
                if let Some(&val) = self.resolved.get(&v) {
                    rhs ^= self.field.mul(c, val);
                } else if let Some(last) = coeffs.last_mut().filter(|l| l.0 == v) {
                    last.1 ^= c;
                    if last.1 == 0 {
                        coeffs.pop();
                    }
                } else {
                    coeffs.push((v, c));
                }
            }
        }

        // Reduce against existing pivot rows. Eliminating a pivot can only
        // introduce non-pivot variables, so one pass over the pivots present
        // at entry suffices.
        let present: Vec<Var> = coeffs
            .iter()
            .map(|&(v, _)| v)
            .filter(|v| self.pivot_row.contains_key(v))
            .collect();
        for v in present {
            let Ok(pos) = coeffs.binary_search_by_key(&v, |&(v, _)| v) else {
                continue; // cancelled by an earlier reduction
            };
            let factor = coeffs[pos].1;
            let row_idx = self.pivot_row[&v];
            let row = self.rows[row_idx].as_ref().unwrap();
            coeffs = Self::merge(&self.field, &coeffs, &row.coeffs, factor);
            rhs ^= self.field.mul(factor, row.rhs);
        }

        if coeffs.is_empty() {
            if rhs != 0 {
                self.inconsistent += 1;
                debug_assert!(false, "inconsistent equation fed to eliminator");
            }
            return;
        }

        // Normalize the new pivot to coefficient 1.
        let pivot = coeffs[0].0;
        let lead = coeffs[0].1;
        if lead != 1 {
            let ilead = self.field.inv(lead);
            for (_, c) in coeffs.iter_mut() {
                *c = self.field.mul(*c, ilead);
            }
            rhs = self.field.mul(rhs, ilead);
        }

        // Install.
        let idx = match self.free_slots.pop() {
            Some(i) => i,
            None => {
                self.rows.push(None);
                self.rows.len() - 1
            }
        };
        for &(v, _) in &coeffs[1..] {
            self.occurs.entry(v).or_default().insert(idx);
        }
        self.pivot_row.insert(pivot, idx);
        self.rows[idx] = Some(Row { coeffs, rhs });

        // Jordan step: clear the new pivot from every other row, then cascade
        // any rows that shrank to a single variable.
        let mut pending = Vec::new();
        if let Some(users) = self.occurs.remove(&pivot) {
            for r in users {
                if r == idx {
                    continue;
                }
                let factor = {
                    let row = self.rows[r].as_ref().unwrap();
                    row.coeffs
                        .iter()
                        .find(|&&(v, _)| v == pivot)
                        .map(|&(_, c)| c)
                        .unwrap()
                };
                let (new_coeffs, new_rhs) = {
                    let src = self.rows[idx].as_ref().unwrap();
                    let dst = self.rows[r].as_ref().unwrap();
                    (
                        Self::merge(&self.field, &dst.coeffs, &src.coeffs, factor),
                        dst.rhs ^ self.field.mul(factor, src.rhs),
                    )
                };
                self.reindex_row(r, new_coeffs, new_rhs);
                let width = self.rows[r].as_ref().unwrap().coeffs.len();
                if width == 1 {
                    pending.push(r);
                }
            }
        }
        if self.rows[idx].as_ref().unwrap().coeffs.len() == 1 {
            pending.push(idx);
        }
        for r in pending {
            self.resolve_row(r);
        }
    }

    /// Replaces row `r`'s contents, keeping the occurrence index accurate.
    fn reindex_row(&mut self, r: usize, new_coeffs: Vec<(Var, Fe)>, new_rhs: Fe) {
        let old = self.rows[r].take().unwrap();
        for &(v, _) in &old.coeffs[1..] {
            if let Entry::Occupied(mut e) = self.occurs.entry(v) {
                e.get_mut().remove(&r);
                if e.get().is_empty() {
                    e.remove();
                }
            }
        }
        debug_assert_eq!(old.coeffs[0].0, new_coeffs[0].0, "pivot must survive");
        for &(v, _) in &new_coeffs[1..] {
            self.occurs.entry(v).or_default().insert(r);
        }
        self.rows[r] = Some(Row {
            coeffs: new_coeffs,
            rhs: new_rhs,
        });
    }

    /// Converts a width-1 row into a resolved value.
    fn resolve_row(&mut self, r: usize) {
        let row = self.rows[r].take().unwrap();
        debug_assert_eq!(row.coeffs.len(), 1);
        debug_assert_eq!(row.coeffs[0].1, 1, "pivot not normalized");
        let (v, _) = row.coeffs[0];
        self.pivot_row.remove(&v);
        self.free_slots.push(r);
        self.resolved.insert(v, row.rhs);
        self.events.push((v, row.rhs));
    }

    /// Retires a variable: forgets its resolved value, or — if it is still
    /// unknown — drops every equation that references it.
    pub fn drop_var(&mut self, v: Var) {
        if self.resolved.remove(&v).is_some() {
            return;
        }
        if let Some(r) = self.pivot_row.get(&v).copied() {
            self.remove_row(r);
        }
        if let Some(users) = self.occurs.remove(&v) {
            for r in users {
                self.remove_row(r);
            }
        }
    }

    fn remove_row(&mut self, r: usize) {
        let Some(row) = self.rows[r].take() else {
            return;
        };
        self.pivot_row.remove(&row.coeffs[0].0);
        for &(v, _) in &row.coeffs[1..] {
            if let Entry::Occupied(mut e) = self.occurs.entry(v) {
                e.get_mut().remove(&r);
                if e.get().is_empty() {
                    e.remove();
                }
            }
        }
        self.free_slots.push(r);
    }
}
