//! Balance sheets, the interbank loan book and the net exposure matrix.
//!
//! Every bank carries the full balance sheet (interbank and household
//! positions, bond holdings, the external risky asset and liability) even
//! though its equity always reduces to `Y - Z`: household deposits are either
//! lent on the interbank market or parked in bonds, and household loans are
//! always funded by interbank borrowing. Interest payments never touch the
//! balance sheet.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

/// Dense bank index in `0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct BankId(pub usize);

impl BankId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for BankId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for BankId {
    fn from(i: usize) -> Self {
        BankId(i)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("bank {0} is out of range for a system of {1} banks")]
    UnknownBank(BankId, usize),
    #[error("bank {0} cannot lend to itself")]
    SelfLoan(BankId),
    #[error("bank {0} is bankrupt and cannot trade")]
    BankruptCounterparty(BankId),
    #[error("bank {0} is already bankrupt")]
    AlreadyBankrupt(BankId),
    #[error("bank {0} appears in more than one trade this period")]
    DuplicateTrade(BankId),
    #[error("loan maturity must be at least one period")]
    ZeroMaturity,
    #[error("loan amount must be positive and finite, got {0}")]
    InvalidAmount(f64),
    #[error("loan originated at {origination} with maturity {maturity} is not live at period {period}")]
    ExpiredLoan {
        origination: u64,
        maturity: u32,
        period: u64,
    },
    #[error("exposure matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("exposure matrix is not antisymmetric at ({row}, {col}): {value} vs {mirror}")]
    NotAntisymmetric {
        row: usize,
        col: usize,
        value: f64,
        mirror: f64,
    },
    #[error("expected {expected} entries, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// One bank's balance sheet and risk parameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BankState {
    pub id: BankId,
    /// External risky asset `Y`.
    pub risky_asset: f64,
    /// External long-term liability `Z`.
    pub external_liability: f64,
    /// Intensity of the jump that wipes out `Y`.
    pub hazard_rate: f64,
    /// Rate paid on household deposits; also the base lending rate.
    pub deposit_rate: f64,
    /// Highest rate the bank accepts when borrowing.
    pub reservation_rate: f64,
    pub ib_assets: f64,
    pub ib_liabilities: f64,
    pub hh_assets: f64,
    pub hh_liabilities: f64,
    /// Risk-free bonds bought with deposits that found no borrower.
    pub bonds: f64,
    pub bankrupt: bool,
}

impl BankState {
    pub fn new(
        id: BankId,
        risky_asset: f64,
        external_liability: f64,
        hazard_rate: f64,
        deposit_rate: f64,
        reservation_rate: f64,
    ) -> Self {
        BankState {
            id,
            risky_asset,
            external_liability,
            hazard_rate,
            deposit_rate,
            reservation_rate,
            ib_assets: 0.0,
            ib_liabilities: 0.0,
            hh_assets: 0.0,
            hh_liabilities: 0.0,
            bonds: 0.0,
            bankrupt: false,
        }
    }

    /// Assets minus liabilities over the whole balance sheet.
    pub fn equity(&self) -> f64 {
        self.risky_asset + self.ib_assets + self.hh_assets + self.bonds
            - self.external_liability
            - self.ib_liabilities
            - self.hh_liabilities
    }

    /// `Y - Z`, which `equity` must always equal.
    pub fn external_equity(&self) -> f64 {
        self.risky_asset - self.external_liability
    }

    pub fn is_solvent(&self) -> bool {
        !self.bankrupt
    }
}

/// Equities of all banks, in index order.
pub fn equities(banks: &[BankState]) -> Vec<f64> {
    banks.iter().map(BankState::equity).collect()
}

/// Hazard rates of all banks, in index order.
pub fn hazard_rates(banks: &[BankState]) -> Vec<f64> {
    banks.iter().map(|b| b.hazard_rate).collect()
}

/// Outcome of an exogenous jump in a bank's risky asset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalEvent {
    pub bank: BankId,
    pub equity: f64,
}

/// Wipes out the risky asset of `failed` and marks it bankrupt.
///
/// The first such event is the terminal time of the economy; the caller
/// decides what to do with it (typically run a cascade).
pub fn apply_exogenous_shock(
    banks: &mut [BankState],
    failed: BankId,
) -> Result<TerminalEvent, DomainError> {
    let n = banks.len();
    let bank = banks
        .get_mut(failed.index())
        .ok_or(DomainError::UnknownBank(failed, n))?;
    if bank.bankrupt {
        return Err(DomainError::AlreadyBankrupt(failed));
    }
    bank.risky_asset = 0.0;
    bank.bankrupt = true;
    Ok(TerminalEvent {
        bank: failed,
        equity: bank.equity(),
    })
}

/// A single interbank loan.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Loan {
    pub lender: BankId,
    pub borrower: BankId,
    pub amount: f64,
    pub origination: u64,
    pub maturity: u32,
}

impl Loan {
    /// Period at which the loan is repaid and leaves the book.
    pub fn matures_at(&self) -> u64 {
        self.origination + u64::from(self.maturity)
    }

    /// Live on `origination <= t < origination + maturity`.
    pub fn is_live(&self, period: u64) -> bool {
        self.origination <= period && period < self.matures_at()
    }
}

/// Household deposit parked in the risk-free asset for the deposit's term.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BondHolding {
    pub bank: BankId,
    pub amount: f64,
    pub origination: u64,
    pub maturity: u32,
}

impl BondHolding {
    pub fn matures_at(&self) -> u64 {
        self.origination + u64::from(self.maturity)
    }
}

/// What happened to the book in one call to [`LoanBook::advance_period`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeriodSettlement {
    pub period: u64,
    pub matured: usize,
    pub originated: usize,
    pub bonds_placed: usize,
}

/// Multiset of outstanding loans (a directed multigraph) plus the bond
/// holdings that back unlent deposits.
#[derive(Debug, Clone, PartialEq)]
pub struct LoanBook {
    banks: usize,
    period: u64,
    loans: Vec<Loan>,
    bonds: Vec<BondHolding>,
}

impl LoanBook {
    /// Empty book at period 0.
    pub fn new(banks: usize) -> Self {
        LoanBook {
            banks,
            period: 0,
            loans: Vec::new(),
            bonds: Vec::new(),
        }
    }

    pub fn bank_count(&self) -> usize {
        self.banks
    }

    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn loans(&self) -> &[Loan] {
        &self.loans
    }

    pub fn bonds(&self) -> &[BondHolding] {
        &self.bonds
    }

    fn check_bank(&self, bank: BankId) -> Result<(), DomainError> {
        if bank.index() < self.banks {
            Ok(())
        } else {
            Err(DomainError::UnknownBank(bank, self.banks))
        }
    }

    fn check_loan(&self, loan: &Loan) -> Result<(), DomainError> {
        self.check_bank(loan.lender)?;
        self.check_bank(loan.borrower)?;
        if loan.lender == loan.borrower {
            return Err(DomainError::SelfLoan(loan.lender));
        }
        if loan.maturity == 0 {
            return Err(DomainError::ZeroMaturity);
        }
        if !(loan.amount.is_finite() && loan.amount > 0.0) {
            return Err(DomainError::InvalidAmount(loan.amount));
        }
        Ok(())
    }

    /// Inserts an existing loan without touching balance sheets.
    ///
    /// Used to seed a book from a snapshot; the loan must be live now.
    pub fn push_loan(&mut self, loan: Loan) -> Result<(), DomainError> {
        self.check_loan(&loan)?;
        if !loan.is_live(self.period) {
            return Err(DomainError::ExpiredLoan {
                origination: loan.origination,
                maturity: loan.maturity,
                period: self.period,
            });
        }
        self.loans.push(loan);
        Ok(())
    }

    /// Net exposure matrix of the live loans.
    pub fn net_exposure(&self) -> NetExposureMatrix {
        let mut m = NetExposureMatrix::zeros(self.banks);
        for loan in self.loans.iter().filter(|l| l.is_live(self.period)) {
            m.add_loan(loan.lender, loan.borrower, loan.amount);
        }
        m.as_of = self.period;
        m
    }

    /// Net exposure after dropping the loans that mature at `period`.
    ///
    /// This is the network the next matching is added to.
    pub fn net_exposure_at(&self, period: u64) -> NetExposureMatrix {
        let mut m = NetExposureMatrix::zeros(self.banks);
        for loan in self.loans.iter().filter(|l| l.is_live(period)) {
            m.add_loan(loan.lender, loan.borrower, loan.amount);
        }
        m.as_of = period;
        m
    }

    /// Moves the book to the next period.
    ///
    /// Loans and bonds maturing at the new period are removed, one loan per
    /// `(lender, borrower)` trade is originated, and every lender in
    /// `unlent_supply` buys bonds with its deposit. Balance sheets of solvent
    /// banks are updated so that `A_IB + X = L_HH` and `A_HH = L_IB` keep
    /// holding; bankrupt banks' sheets stay frozen.
    pub fn advance_period(
        &mut self,
        banks: &mut [BankState],
        trades: &[(BankId, BankId)],
        unlent_supply: &[BankId],
        maturity: u32,
        amount: f64,
    ) -> Result<PeriodSettlement, DomainError> {
        if banks.len() != self.banks {
            return Err(DomainError::DimensionMismatch {
                expected: self.banks,
                found: banks.len(),
            });
        }
        if maturity == 0 {
            return Err(DomainError::ZeroMaturity);
        }
        if !(amount.is_finite() && amount > 0.0) {
            return Err(DomainError::InvalidAmount(amount));
        }

        let mut seen = vec![false; self.banks];
        let mut mark = |bank: BankId| -> Result<(), DomainError> {
            self.check_bank(bank)?;
            if banks[bank.index()].bankrupt {
                return Err(DomainError::BankruptCounterparty(bank));
            }
            if core::mem::replace(&mut seen[bank.index()], true) {
                return Err(DomainError::DuplicateTrade(bank));
            }
            Ok(())
        };
        for &(lender, borrower) in trades {
            if lender == borrower {
                return Err(DomainError::SelfLoan(lender));
            }
            mark(lender)?;
            mark(borrower)?;
        }
        for &bank in unlent_supply {
            mark(bank)?;
        }

        let t = self.period + 1;

        let mut matured = 0;
        self.loans.retain(|loan| {
            if loan.matures_at() > t {
                return true;
            }
            matured += 1;
            let lender = &mut banks[loan.lender.index()];
            if !lender.bankrupt {
                lender.ib_assets -= loan.amount;
                lender.hh_liabilities -= loan.amount;
            }
            let borrower = &mut banks[loan.borrower.index()];
            if !borrower.bankrupt {
                borrower.ib_liabilities -= loan.amount;
                borrower.hh_assets -= loan.amount;
            }
            false
        });
        self.bonds.retain(|bond| {
            if bond.matures_at() > t {
                return true;
            }
            let bank = &mut banks[bond.bank.index()];
            if !bank.bankrupt {
                bank.bonds -= bond.amount;
                bank.hh_liabilities -= bond.amount;
            }
            false
        });

        for &(lender, borrower) in trades {
            self.loans.push(Loan {
                lender,
                borrower,
                amount,
                origination: t,
                maturity,
            });
            let l = &mut banks[lender.index()];
            l.hh_liabilities += amount;
            l.ib_assets += amount;
            let b = &mut banks[borrower.index()];
            b.ib_liabilities += amount;
            b.hh_assets += amount;
        }
        for &bank in unlent_supply {
            self.bonds.push(BondHolding {
                bank,
                amount,
                origination: t,
                maturity,
            });
            let b = &mut banks[bank.index()];
            b.hh_liabilities += amount;
            b.bonds += amount;
        }

        self.period = t;
        Ok(PeriodSettlement {
            period: t,
            matured,
            originated: trades.len(),
            bonds_placed: unlent_supply.len(),
        })
    }

    /// Balance-sheet aggregates implied by the book alone, as
    /// `(A_IB, L_IB, A_HH, L_HH, X)` per bank.
    pub fn implied_balance_sheets(&self) -> Vec<[f64; 5]> {
        let mut out = vec![[0.0; 5]; self.banks];
        for loan in self.loans.iter().filter(|l| l.is_live(self.period)) {
            out[loan.lender.index()][0] += loan.amount;
            out[loan.lender.index()][3] += loan.amount;
            out[loan.borrower.index()][1] += loan.amount;
            out[loan.borrower.index()][2] += loan.amount;
        }
        for bond in self.bonds.iter().filter(|b| b.matures_at() > self.period) {
            out[bond.bank.index()][3] += bond.amount;
            out[bond.bank.index()][4] += bond.amount;
        }
        out
    }
}

/// Antisymmetric matrix of netted bilateral exposures.
///
/// Entry `(i, j)` is what `i` has lent to `j` minus what `j` has lent to
/// `i`; a positive entry means `i` loses that amount if `j` defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct NetExposureMatrix {
    n: usize,
    entries: Vec<f64>,
    as_of: u64,
}

impl NetExposureMatrix {
    pub fn zeros(n: usize) -> Self {
        NetExposureMatrix {
            n,
            entries: vec![0.0; n * n],
            as_of: 0,
        }
    }

    /// Builds a matrix from dense rows, rejecting anything that is not
    /// square and antisymmetric (relative tolerance 1e-9).
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, DomainError> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n {
                return Err(DomainError::NotSquare {
                    row: i,
                    len: row.len(),
                    expected: n,
                });
            }
            entries.extend_from_slice(row);
        }
        let scale = entries.iter().fold(1.0_f64, |m, v| m.max(libm::fabs(*v)));
        let tol = 1e-9 * scale;
        for i in 0..n {
            for j in i..n {
                let a = entries[i * n + j];
                let b = entries[j * n + i];
                if !a.is_finite() || !b.is_finite() || libm::fabs(a + b) > tol {
                    return Err(DomainError::NotAntisymmetric {
                        row: i,
                        col: j,
                        value: a,
                        mirror: b,
                    });
                }
            }
        }
        // snap the lower triangle so the invariant holds exactly
        for i in 0..n {
            entries[i * n + i] = 0.0;
            for j in (i + 1)..n {
                entries[j * n + i] = -entries[i * n + j];
            }
        }
        Ok(NetExposureMatrix {
            n,
            entries,
            as_of: 0,
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn as_of(&self) -> u64 {
        self.as_of
    }

    pub fn with_as_of(mut self, period: u64) -> Self {
        self.as_of = period;
        self
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.entries.chunks(self.n.max(1)).take(self.n)
    }

    /// Records a loan of `amount` from `lender` to `borrower`.
    pub fn add_loan(&mut self, lender: BankId, borrower: BankId, amount: f64) {
        let (i, j) = (lender.index(), borrower.index());
        debug_assert!(i != j);
        self.entries[i * self.n + j] += amount;
        self.entries[j * self.n + i] -= amount;
    }

    pub fn with_loan(&self, lender: BankId, borrower: BankId, amount: f64) -> Self {
        let mut m = self.clone();
        m.add_loan(lender, borrower, amount);
        m
    }

    /// Net lending position `sum_j A[i][j]`.
    pub fn net_position(&self, i: usize) -> f64 {
        self.row(i).iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|v| *v == 0.0)
    }

    /// Exact antisymmetry check, including a zero diagonal.
    pub fn is_antisymmetric(&self) -> bool {
        (0..self.n).all(|i| {
            self.get(i, i) == 0.0 && ((i + 1)..self.n).all(|j| self.get(i, j) == -self.get(j, i))
        })
    }

    /// Undirected adjacency: an edge wherever the net exposure is nonzero.
    pub fn undirected_adjacency(&self) -> Vec<Vec<bool>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| i != j && self.get(i, j) != 0.0).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn banks(n: usize) -> Vec<BankState> {
        (0..n)
            .map(|i| BankState::new(BankId(i), 1.5, 0.5, 0.0, 0.01, 0.09))
            .collect()
    }

    #[test]
    fn empty_book_gives_zero_matrix() {
        let book = LoanBook::new(4);
        let m = book.net_exposure();
        assert_eq!(m.size(), 4);
        assert!(m.is_zero());
    }

    #[test]
    fn opposite_loans_net_out() {
        let mut book = LoanBook::new(3);
        for (l, b) in [(0, 2), (2, 0)] {
            book.push_loan(Loan {
                lender: BankId(l),
                borrower: BankId(b),
                amount: 1.0,
                origination: 0,
                maturity: 5,
            })
            .unwrap();
        }
        let m = book.net_exposure();
        assert_eq!(m.get(0, 2), 0.0);
        assert_eq!(m.get(2, 0), 0.0);
    }

    #[test]
    fn parallel_loans_accumulate() {
        let mut book = LoanBook::new(2);
        for t in 1..3 {
            book.push_loan(Loan {
                lender: BankId(1),
                borrower: BankId(0),
                amount: 1.0,
                origination: t,
                maturity: 10,
            })
            .unwrap_err();
        }
        // only loans live at the current period are accepted
        book.push_loan(Loan {
            lender: BankId(1),
            borrower: BankId(0),
            amount: 1.0,
            origination: 0,
            maturity: 10,
        })
        .unwrap();
        book.push_loan(Loan {
            lender: BankId(1),
            borrower: BankId(0),
            amount: 1.0,
            origination: 0,
            maturity: 3,
        })
        .unwrap();
        assert_eq!(book.loans().len(), 2);
        assert_eq!(book.net_exposure().get(1, 0), 2.0);
    }

    #[test]
    fn loan_expires_exactly_at_maturity() {
        let mut bs = banks(2);
        let mut book = LoanBook::new(2);
        book.push_loan(Loan {
            lender: BankId(0),
            borrower: BankId(1),
            amount: 1.0,
            origination: 0,
            maturity: 30,
        })
        .unwrap();
        for _ in 0..29 {
            book.advance_period(&mut bs, &[], &[], 30, 1.0).unwrap();
            assert_eq!(book.loans().len(), 1);
        }
        let s = book.advance_period(&mut bs, &[], &[], 30, 1.0).unwrap();
        assert_eq!(s.period, 30);
        assert_eq!(s.matured, 1);
        assert!(book.loans().is_empty());
    }

    #[test]
    fn matching_of_example_creates_four_loans() {
        let mut bs = banks(9);
        let mut book = LoanBook::new(9);
        let trades: Vec<_> = [(4, 6), (1, 7), (2, 8), (3, 9)]
            .iter()
            .map(|&(l, b)| (BankId(l - 1), BankId(b - 1)))
            .collect();
        let s = book
            .advance_period(&mut bs, &trades, &[], 30, 1.0)
            .unwrap();
        assert_eq!(s.originated, 4);
        assert_eq!(book.loans().len(), 4);
        assert!(book.loans().iter().all(|l| l.is_live(book.period())));
    }

    #[test]
    fn balance_sheet_identities_hold_through_settlement() {
        let mut bs = banks(4);
        let mut book = LoanBook::new(4);
        book.advance_period(&mut bs, &[(BankId(0), BankId(1))], &[BankId(2)], 2, 1.0)
            .unwrap();
        book.advance_period(&mut bs, &[(BankId(2), BankId(3))], &[BankId(0)], 2, 1.0)
            .unwrap();
        for b in &bs {
            assert!((b.equity() - b.external_equity()).abs() < 1e-12);
            assert!((b.ib_assets + b.bonds - b.hh_liabilities).abs() < 1e-12);
            assert!((b.hh_assets - b.ib_liabilities).abs() < 1e-12);
        }
        assert_eq!(bs[0].ib_assets, 1.0);
        assert_eq!(bs[0].bonds, 1.0);
        book.advance_period(&mut bs, &[], &[], 2, 1.0).unwrap();
        book.advance_period(&mut bs, &[], &[], 2, 1.0).unwrap();
        for b in &bs {
            assert_eq!(b.hh_liabilities, 0.0);
            assert_eq!(b.ib_assets, 0.0);
            assert_eq!(b.bonds, 0.0);
        }
    }

    #[test]
    fn rejects_bankrupt_counterparty() {
        let mut bs = banks(3);
        apply_exogenous_shock(&mut bs, BankId(1)).unwrap();
        let mut book = LoanBook::new(3);
        let err = book
            .advance_period(&mut bs, &[(BankId(0), BankId(1))], &[], 5, 1.0)
            .unwrap_err();
        assert_eq!(err, DomainError::BankruptCounterparty(BankId(1)));
    }

    #[test]
    fn rejects_bank_trading_twice() {
        let mut bs = banks(3);
        let mut book = LoanBook::new(3);
        let err = book
            .advance_period(
                &mut bs,
                &[(BankId(0), BankId(1)), (BankId(0), BankId(2))],
                &[],
                5,
                1.0,
            )
            .unwrap_err();
        assert_eq!(err, DomainError::DuplicateTrade(BankId(0)));
    }

    #[test]
    fn exogenous_shock_wipes_risky_asset() {
        let mut bs = vec![
            BankState::new(BankId(0), 2.0, 0.5, 0.0, 0.0, 0.0),
            BankState::new(BankId(1), 0.6, 0.5, 0.0, 0.0, 0.0),
        ];
        let ev = apply_exogenous_shock(&mut bs, BankId(0)).unwrap();
        assert_eq!(ev.equity, -0.5);
        assert!(bs[0].bankrupt);
        let ev = apply_exogenous_shock(&mut bs, BankId(1)).unwrap();
        assert_eq!(ev.equity, -0.5);
        assert_eq!(
            apply_exogenous_shock(&mut bs, BankId(1)),
            Err(DomainError::AlreadyBankrupt(BankId(1)))
        );
    }

    #[test]
    fn no_shock_leaves_assets_alone() {
        let mut bs = banks(3);
        let mut book = LoanBook::new(3);
        book.advance_period(&mut bs, &[], &[], 5, 1.0).unwrap();
        assert!(bs.iter().all(|b| b.risky_asset == 1.5 && !b.bankrupt));
    }

    #[test]
    fn from_rows_rejects_asymmetry() {
        let err = NetExposureMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap_err();
        assert!(matches!(err, DomainError::NotAntisymmetric { row: 0, col: 1, .. }));
        let err = NetExposureMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0]]).unwrap_err();
        assert!(matches!(err, DomainError::NotSquare { row: 1, .. }));
    }
}
