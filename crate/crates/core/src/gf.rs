//! GF(2^m) arithmetic and dense linear algebra.
//!
//! Fields are built from fixed reduction polynomials — x^8 + x^4 + x^3 + x + 1
//! for m = 8 and x^16 + x^12 + x^3 + x + 1 for m = 16 — so seeded matrices and
//! packet streams are bit-identical across runs and platforms. Multiplication
//! goes through log/antilog tables over a multiplicative generator found at
//! construction time (the m = 8 polynomial is irreducible but x is not a
//! generator there, so the search matters). Elimination uses deterministic
//! first-nonzero pivoting; there is no numerical error anywhere, only exact
//! field arithmetic.

use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// A field element; only the low `m` bits are meaningful.
pub type Fe = u16;

/// Errors from field construction and linear solves.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum GfError {
    #[error("unsupported field width m={0}; supported widths are 8 and 16")]
    UnsupportedWidth(u32),
    #[error("inconsistent linear system")]
    Inconsistent,
}

/// Addition in GF(2^m) is XOR and needs no table context.
pub fn add(a: Fe, b: Fe) -> Fe {
    a ^ b
}

struct Tables {
    m: u32,
    poly: u32,
    mask: u32,
    generator: Fe,
    /// log[a] for a != 0; log[0] is a guarded placeholder.
    log: Vec<u16>,
    /// antilog, doubled so an index sum of two logs needs no reduction.
    alog: Vec<Fe>,
}

/// A binary extension field GF(2^m) with multiplication tables.
///
/// Cheap to clone; the tables are shared behind an `Arc`.
#[derive(Clone)]
pub struct Field(Arc<Tables>);

/// Shift-and-reduce product used for table construction (and as an
/// independent oracle in tests).
fn slow_mul(mut a: u32, mut b: u32, poly: u32, m: u32) -> Fe {
    let mut acc = 0u32;
    while b != 0 {
        if b & 1 != 0 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if (a >> m) & 1 != 0 {
            a ^= poly;
        }
    }
    acc as Fe
}

impl Field {
    /// Builds GF(2^m) for m = 8 or 16 with the fixed reduction polynomial.
    pub fn new(m: u32) -> Result<Field, GfError> {
        let poly: u32 = match m {
            8 => 0x11B,
            16 => 0x1_100B,
            other => return Err(GfError::UnsupportedWidth(other)),
        };
        let q = 1usize << m;
        let mask = (q - 1) as u32;
        // Find the smallest multiplicative generator: walk its powers and
        // accept only a full (q-1)-cycle through the nonzero elements.
        let mut generator = 0u32;
        let mut alog = vec![0 as Fe; 2 * (q - 1)];
        'search: for g in 2..q as u32 {
            let mut x = 1u32;
            for i in 0..q - 1 {
                alog[i] = x as Fe;
                x = slow_mul(x, g, poly, m) as u32;
                if x == 1 && i + 1 < q - 1 {
                    continue 'search; // short cycle: not a generator
                }
            }
            if x == 1 {
                generator = g;
                break;
            }
        }
        assert!(generator != 0, "no generator found; polynomial is not irreducible");
        let mut log = vec![0u16; q];
        for i in 0..q - 1 {
            log[alog[i] as usize] = i as u16;
            alog[i + q - 1] = alog[i];
        }
        Ok(Field(Arc::new(Tables {
            m,
            poly,
            mask,
            generator: generator as Fe,
            log,
            alog,
        })))
    }

    /// Field width m.
    pub fn m(&self) -> u32 {
        self.0.m
    }

    /// The reduction polynomial including the x^m term.
    pub fn poly(&self) -> u32 {
        self.0.poly
    }

    /// The multiplicative generator the tables are built on.
    pub fn generator(&self) -> Fe {
        self.0.generator
    }

    /// Number of field elements, 2^m.
    pub fn size(&self) -> usize {
        (self.0.mask as usize) + 1
    }

    /// Multiplication via log/antilog lookup.
    #[inline]
    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        if a == 0 || b == 0 {
            0
        } else {
            let t = &*self.0;
            t.alog[t.log[a as usize] as usize + t.log[b as usize] as usize]
        }
    }

    /// Multiplicative inverse; panics on zero (a contract violation).
    #[inline]
    pub fn inv(&self, a: Fe) -> Fe {
        assert!(a != 0, "inverse of zero");
        let t = &*self.0;
        let q1 = t.mask as usize;
        t.alog[q1 - t.log[a as usize] as usize]
    }

    /// Division a/b; panics if b is zero.
    #[inline]
    pub fn div(&self, a: Fe, b: Fe) -> Fe {
        self.mul(a, self.inv(b))
    }

    /// dst ^= c * src, the row operation at the core of every elimination.
    #[inline]
    pub(crate) fn axpy(&self, dst: &mut [Fe], src: &[Fe], c: Fe) {
        debug_assert_eq!(dst.len(), src.len());
        if c == 0 {
            return;
        }
        let t = &*self.0;
        let lc = t.log[c as usize] as usize;
        for (d, &s) in dst.iter_mut().zip(src.iter()) {
            if s != 0 {
                *d ^= t.alog[lc + t.log[s as usize] as usize];
            }
        }
    }

    /// Uniform random element from masked ChaCha output.
    #[inline]
    pub(crate) fn random_element(&self, rng: &mut ChaCha8Rng) -> Fe {
        (rng.next_u32() & self.0.mask) as Fe
    }

    /// Deterministic random matrix: ChaCha keyed by `seed`, entries drawn
    /// row-major. The same (seed, shape, m) always yields the same matrix.
    pub fn seeded_random_matrix(&self, rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Matrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, self.random_element(&mut rng));
            }
        }
        m
    }

    /// Matrix product a * b.
    pub fn mat_mul(&self, a: &Matrix, b: &Matrix) -> Matrix {
        assert_eq!(a.cols, b.rows, "dimension mismatch in mat_mul");
        let mut out = Matrix::zeros(a.rows, b.cols);
        for r in 0..a.rows {
            for i in 0..a.cols {
                let av = a.get(r, i);
                if av != 0 {
                    let (dst, src) = (out.row_mut(r), b.row(i));
                    self.axpy(dst, src, av);
                }
            }
        }
        out
    }

    /// Row vector times matrix.
    pub fn vec_mat(&self, v: &[Fe], m: &Matrix) -> Vec<Fe> {
        assert_eq!(v.len(), m.rows, "dimension mismatch in vec_mat");
        let mut out = vec![0 as Fe; m.cols];
        for (i, &vi) in v.iter().enumerate() {
            if vi != 0 {
                self.axpy(&mut out, m.row(i), vi);
            }
        }
        out
    }

    /// Row-echelon elimination in place with first-nonzero pivoting over the
    /// first `col_limit` columns. Pivot rows are normalized to a leading 1.
    /// Returns the pivot column indices in increasing order.
    pub(crate) fn echelon(&self, m: &mut Matrix, col_limit: usize) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..col_limit.min(m.cols) {
            let Some(p) = (r..m.rows).find(|&i| m.get(i, c) != 0) else {
                continue;
            };
            m.swap_rows(r, p);
            let lead = m.get(r, c);
            if lead != 1 {
                let ilee = self.inv(lead);
                let row = m.row_mut(r);
                for x in row[c..].iter_mut() {
                    *x = self.mul(*x, ilee);
                }
            }
            // Split borrows: copy out the pivot tail once, then clear below.
            let pivot_row = m.row(r)[c..].to_vec();
            for i in r + 1..m.rows {
                let f = m.get(i, c);
                if f != 0 {
                    let row = m.row_mut(i);
                    self.axpy(&mut row[c..], &pivot_row, f);
                }
            }
            pivots.push(c);
            r += 1;
            if r == m.rows {
                break;
            }
        }
        pivots
    }

    /// Rank by Gaussian elimination (the input is copied).
    pub fn rank(&self, m: &Matrix) -> usize {
        let mut work = m.clone();
        let cols = work.cols;
        self.echelon(&mut work, cols).len()
    }

    /// One elimination pass reporting (pivots within the first `prefix`
    /// columns, total pivots). Because columns are processed left to right,
    /// the first count equals the rank of the prefix column block.
    pub fn column_ranks(&self, m: &Matrix, prefix: usize) -> (usize, usize) {
        let mut work = m.clone();
        let cols = work.cols;
        let pivots = self.echelon(&mut work, cols);
        let in_prefix = pivots.iter().take_while(|&&c| c < prefix).count();
        (in_prefix, pivots.len())
    }

    /// Solves a x = b for a column vector x. Returns the solution and a
    /// uniqueness flag (false when free variables were set to zero).
    pub fn solve(&self, a: &Matrix, b: &[Fe]) -> Result<(Vec<Fe>, bool), GfError> {
        assert_eq!(a.rows, b.len(), "dimension mismatch in solve");
        let mut work = Matrix::zeros(a.rows, a.cols + 1);
        for r in 0..a.rows {
            work.row_mut(r)[..a.cols].copy_from_slice(a.row(r));
            work.set(r, a.cols, b[r]);
        }
        let pivots = self.echelon(&mut work, a.cols);
        for r in pivots.len()..a.rows {
            if work.get(r, a.cols) != 0 {
                return Err(GfError::Inconsistent);
            }
        }
        let mut x = vec![0 as Fe; a.cols];
        for (r, &c) in pivots.iter().enumerate().rev() {
            let mut acc = work.get(r, a.cols);
            for j in c + 1..a.cols {
                acc ^= self.mul(work.get(r, j), x[j]);
            }
            x[c] = acc; // pivot normalized to 1
        }
        Ok((x, pivots.len() == a.cols))
    }
}

impl std::fmt::Debug for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Field(m={}, poly={:#x})", self.0.m, self.0.poly)
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.0.m == other.0.m
    }
}
impl Eq for Field {}

/// Dense row-major matrix of field elements.
#[derive(Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Fe>,
}

impl Matrix {
    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    /// Identity of order n.
    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    /// Builds from row slices; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<Fe>]) -> Matrix {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut m = Matrix::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            m.row_mut(i).copy_from_slice(row);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Fe {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Fe) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[Fe] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [Fe] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let (head, tail) = self.data.split_at_mut(hi * self.cols);
        head[lo * self.cols..(lo + 1) * self.cols].swap_with_slice(&mut tail[..self.cols]);
    }

    /// True if every entry is zero.
    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }
}

impl std::fmt::Debug for Matrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows.min(8) {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        if self.rows > 8 {
            writeln!(f, "  ...")?;
        }
        write!(f, "]")
    }
}
