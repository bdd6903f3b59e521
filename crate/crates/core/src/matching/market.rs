use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{Assignment, LenderMode, Matching, MatchingError};
use crate::contracts::QuoteSet;
use crate::domain::{BankId, BankState};

/// Lender and borrower sets drawn for one period.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MarketSides {
    pub period: u64,
    pub lenders: Vec<BankId>,
    pub borrowers: Vec<BankId>,
}

/// Draws one liquidity shock per bank: lender with probability `y/2`,
/// borrower with probability `y/2`, nothing otherwise.
///
/// One uniform is consumed per bank, bankrupt or not, so the stream stays
/// aligned across runs that differ only in which banks have failed.
pub fn draw_shocks<R: Rng + ?Sized>(
    banks: &[BankState],
    y: f64,
    period: u64,
    rng: &mut R,
) -> Result<MarketSides, MatchingError> {
    if !(0.0..=1.0).contains(&y) {
        return Err(MatchingError::InvalidShockProbability(y));
    }
    let mut sides = MarketSides {
        period,
        ..MarketSides::default()
    };
    for bank in banks {
        let u: f64 = rng.random();
        if bank.bankrupt {
            continue;
        }
        if u < 0.5 * y {
            sides.lenders.push(bank.id);
        } else if u < y {
            sides.borrowers.push(bank.id);
        }
    }
    Ok(sides)
}

/// A borrower's ranking with itself inserted at the reservation cut.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PreferenceList {
    pub borrower: BankId,
    /// Lenders then self, best first.
    pub ranked: Vec<BankId>,
    /// Index of the borrower itself in `ranked`.
    pub cut: usize,
}

/// Lenders, borrowers, quotes and the preferences they induce.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LiquidityMarket {
    period: u64,
    quotes: QuoteSet,
    reservation: Vec<f64>,
    rho: Vec<f64>,
    lender_mode: LenderMode,
    maturity: u32,
    /// Per borrower: lender positions, best first.
    ranking: Vec<Vec<usize>>,
    /// Per borrower: rank of each lender position.
    rank: Vec<Vec<usize>>,
    /// Per borrower: number of acceptable lenders.
    cut: Vec<usize>,
    /// Borrower positions, best first, shared by every lender.
    lender_ranking: Vec<usize>,
    lender_rank: Vec<usize>,
}

impl LiquidityMarket {
    /// Builds a market from quotes and the borrowers' reservation rates and
    /// default probabilities (both indexed like `quotes.borrowers`).
    ///
    /// Both sides are sorted by bank id; exact rate ties are broken by bank
    /// id with a warning.
    pub fn new(
        period: u64,
        quotes: QuoteSet,
        reservation: Vec<f64>,
        rho: Vec<f64>,
        lender_mode: LenderMode,
        maturity: u32,
    ) -> Result<Self, MatchingError> {
        let nl = quotes.lenders.len();
        let nb = quotes.borrowers.len();
        for (expected, found) in [
            (nl, quotes.base_rates.len()),
            (nl * nb, quotes.premia.len()),
            (nl * nb, quotes.tax.len()),
            (nb, reservation.len()),
            (nb, rho.len()),
        ] {
            if expected != found {
                return Err(MatchingError::DimensionMismatch { expected, found });
            }
        }
        check_distinct(&quotes.lenders, &quotes.borrowers)?;

        let mut lo: Vec<usize> = (0..nl).collect();
        lo.sort_by_key(|&i| quotes.lenders[i]);
        let mut bo: Vec<usize> = (0..nb).collect();
        bo.sort_by_key(|&j| quotes.borrowers[j]);
        let mut premia = Vec::with_capacity(nl * nb);
        let mut tax = Vec::with_capacity(nl * nb);
        for &i in &lo {
            for &j in &bo {
                premia.push(quotes.premia[i * nb + j]);
                tax.push(quotes.tax[i * nb + j]);
            }
        }
        let quotes = QuoteSet {
            lenders: lo.iter().map(|&i| quotes.lenders[i]).collect(),
            borrowers: bo.iter().map(|&j| quotes.borrowers[j]).collect(),
            base_rates: lo.iter().map(|&i| quotes.base_rates[i]).collect(),
            premia,
            tax,
        };
        let reservation: Vec<f64> = bo.iter().map(|&j| reservation[j]).collect();
        let rho: Vec<f64> = bo.iter().map(|&j| rho[j]).collect();

        let mut market = LiquidityMarket {
            period,
            quotes,
            reservation,
            rho,
            lender_mode,
            maturity,
            ranking: Vec::new(),
            rank: Vec::new(),
            cut: Vec::new(),
            lender_ranking: Vec::new(),
            lender_rank: Vec::new(),
        };
        market.rebuild()?;
        Ok(market)
    }

    /// Market for `sides` with fair quotes from each bank's deposit rate and
    /// the given per-bank default probabilities.
    pub fn from_banks(
        sides: &MarketSides,
        banks: &[BankState],
        rho: &[f64],
        maturity: u32,
        lender_mode: LenderMode,
    ) -> Result<Self, MatchingError> {
        if rho.len() != banks.len() {
            return Err(MatchingError::DimensionMismatch {
                expected: banks.len(),
                found: rho.len(),
            });
        }
        let bank = |id: BankId| {
            banks
                .get(id.index())
                .ok_or(MatchingError::DimensionMismatch {
                    expected: banks.len(),
                    found: id.index() + 1,
                })
        };
        let base_rates = sides
            .lenders
            .iter()
            .map(|&l| bank(l).map(|b| b.deposit_rate))
            .collect::<Result<Vec<_>, _>>()?;
        let reservation = sides
            .borrowers
            .iter()
            .map(|&b| bank(b).map(|s| s.reservation_rate))
            .collect::<Result<Vec<_>, _>>()?;
        let borrower_rho: Vec<f64> = sides.borrowers.iter().map(|b| rho[b.index()]).collect();
        let quotes = QuoteSet::fair(
            sides.lenders.clone(),
            sides.borrowers.clone(),
            base_rates,
            &borrower_rho,
            maturity,
        )?;
        LiquidityMarket::new(
            sides.period,
            quotes,
            reservation,
            borrower_rho,
            lender_mode,
            maturity,
        )
    }

    fn rebuild(&mut self) -> Result<(), MatchingError> {
        let nl = self.quotes.lenders.len();
        let nb = self.quotes.borrowers.len();
        self.ranking.clear();
        self.rank.clear();
        self.cut.clear();
        for j in 0..nb {
            for i in 0..nl {
                let rate = self.quotes.rate(i, j);
                if !rate.is_finite() {
                    return Err(MatchingError::InvalidRate {
                        lender: self.quotes.lenders[i],
                        borrower: self.quotes.borrowers[j],
                        rate,
                    });
                }
            }
            let mut order: Vec<usize> = (0..nl).collect();
            // positions are already in bank-id order, so a stable sort breaks ties by id
            order.sort_by(|&a, &b| self.quotes.rate(a, j).total_cmp(&self.quotes.rate(b, j)));
            // an SRT prices every off-target lender at the same rate, so
            // only ties in untaxed quotes are worth a warning
            let level = if self.quotes.is_taxed() {
                log::Level::Debug
            } else {
                log::Level::Warn
            };
            for w in order.windows(2) {
                if self.quotes.rate(w[0], j) == self.quotes.rate(w[1], j) {
                    log::log!(
                        level,
                        "borrower {} faces equal rates from lenders {} and {}; ranking by bank id",
                        self.quotes.borrowers[j],
                        self.quotes.lenders[w[0]],
                        self.quotes.lenders[w[1]]
                    );
                }
            }
            let cut = order
                .iter()
                .take_while(|&&i| self.quotes.rate(i, j) < self.reservation[j])
                .count();
            let mut rank = vec![0; nl];
            for (r, &i) in order.iter().enumerate() {
                rank[i] = r;
            }
            self.ranking.push(order);
            self.rank.push(rank);
            self.cut.push(cut);
        }
        let mut order: Vec<usize> = (0..nb).collect();
        order.sort_by(|&a, &b| self.rho[a].total_cmp(&self.rho[b]));
        let mut rank = vec![0; nb];
        for (r, &j) in order.iter().enumerate() {
            rank[j] = r;
        }
        self.lender_ranking = order;
        self.lender_rank = rank;
        Ok(())
    }

    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn lenders(&self) -> &[BankId] {
        &self.quotes.lenders
    }

    pub fn borrowers(&self) -> &[BankId] {
        &self.quotes.borrowers
    }

    pub fn lender_count(&self) -> usize {
        self.quotes.lenders.len()
    }

    pub fn borrower_count(&self) -> usize {
        self.quotes.borrowers.len()
    }

    pub fn quotes(&self) -> &QuoteSet {
        &self.quotes
    }

    pub fn reservation(&self) -> &[f64] {
        &self.reservation
    }

    pub fn default_probs(&self) -> &[f64] {
        &self.rho
    }

    pub fn lender_mode(&self) -> LenderMode {
        self.lender_mode
    }

    pub fn maturity(&self) -> u32 {
        self.maturity
    }

    /// Same market with lenders switched to `mode`.
    pub fn with_lender_mode(&self, mode: LenderMode) -> Self {
        LiquidityMarket {
            lender_mode: mode,
            ..self.clone()
        }
    }

    /// Same market with a tax mark-up per (lender, borrower) position pair,
    /// laid out lender-major.
    pub fn with_tax(&self, tax: Vec<f64>) -> Result<Self, MatchingError> {
        let mut market = LiquidityMarket {
            quotes: self.quotes.with_tax(tax)?,
            ..self.clone()
        };
        market.rebuild()?;
        Ok(market)
    }

    /// Sub-market on the given lender and borrower positions.
    pub fn restrict(&self, lenders: &[usize], borrowers: &[usize]) -> Result<Self, MatchingError> {
        let nb = self.borrower_count();
        let mut premia = Vec::with_capacity(lenders.len() * borrowers.len());
        let mut tax = Vec::with_capacity(premia.capacity());
        for &i in lenders {
            for &j in borrowers {
                premia.push(self.quotes.premia[i * nb + j]);
                tax.push(self.quotes.tax[i * nb + j]);
            }
        }
        let quotes = QuoteSet {
            lenders: lenders.iter().map(|&i| self.quotes.lenders[i]).collect(),
            borrowers: borrowers.iter().map(|&j| self.quotes.borrowers[j]).collect(),
            base_rates: lenders.iter().map(|&i| self.quotes.base_rates[i]).collect(),
            premia,
            tax,
        };
        LiquidityMarket::new(
            self.period,
            quotes,
            borrowers.iter().map(|&j| self.reservation[j]).collect(),
            borrowers.iter().map(|&j| self.rho[j]).collect(),
            self.lender_mode,
            self.maturity,
        )
    }

    pub fn lender_position(&self, bank: BankId) -> Option<usize> {
        self.quotes.lenders.binary_search(&bank).ok()
    }

    pub fn borrower_position(&self, bank: BankId) -> Option<usize> {
        self.quotes.borrowers.binary_search(&bank).ok()
    }

    /// Rate borrower position `j` pays lender position `i`, tax included.
    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.quotes.rate(i, j)
    }

    /// Whether borrower `j` accepts lender `i` under the current (possibly
    /// taxed) quotes.
    #[inline]
    pub fn acceptable(&self, i: usize, j: usize) -> bool {
        self.rank[j][i] < self.cut[j]
    }

    /// Whether the pair clears the reservation rate before any tax.
    pub fn feasible_untaxed(&self, i: usize, j: usize) -> bool {
        self.quotes.untaxed_rate(i, j) < self.reservation[j]
    }

    /// Position of lender `i` in borrower `j`'s ranking (0 is best).
    #[inline]
    pub fn rank(&self, j: usize, i: usize) -> usize {
        self.rank[j][i]
    }

    /// Borrower `j`'s lenders, best first.
    pub fn ranking(&self, j: usize) -> &[usize] {
        &self.ranking[j]
    }

    /// Number of lenders borrower `j` accepts.
    pub fn cut(&self, j: usize) -> usize {
        self.cut[j]
    }

    /// Whether borrower `j` strictly prefers lender `i` to `current`
    /// (`None` meaning unmatched).
    #[inline]
    pub fn borrower_prefers(&self, j: usize, i: usize, current: Option<usize>) -> bool {
        let r = self.rank[j][i];
        match current {
            Some(c) => r < self.rank[j][c],
            None => r < self.cut[j],
        }
    }

    /// Whether (in strict mode) a lender strictly prefers borrower `j` to
    /// `current`.
    #[inline]
    pub fn lender_prefers(&self, j: usize, current: Option<usize>) -> bool {
        match self.lender_mode {
            LenderMode::Indifferent => false,
            LenderMode::Strict => match current {
                None => true,
                Some(c) => self.lender_rank[j] < self.lender_rank[c],
            },
        }
    }

    /// Borrower positions in the lenders' common order, best first.
    pub fn lender_ranking(&self) -> &[usize] {
        &self.lender_ranking
    }

    /// Whether every borrower ranks the lenders in the same order.
    pub fn homogeneous_borrowers(&self) -> Result<(), BankId> {
        match self.ranking.split_first() {
            None => Ok(()),
            Some((first, rest)) => match rest.iter().position(|r| r != first) {
                None => Ok(()),
                Some(k) => Err(self.quotes.borrowers[k + 1]),
            },
        }
    }

    /// Borrower `j`'s preference list with itself at the cut.
    pub fn preference_list(&self, j: usize) -> PreferenceList {
        let borrower = self.quotes.borrowers[j];
        let mut ranked: Vec<BankId> = self.ranking[j]
            .iter()
            .map(|&i| self.quotes.lenders[i])
            .collect();
        ranked.insert(self.cut[j], borrower);
        PreferenceList {
            borrower,
            ranked,
            cut: self.cut[j],
        }
    }

    pub fn preference_lists(&self) -> Vec<PreferenceList> {
        (0..self.borrower_count())
            .map(|j| self.preference_list(j))
            .collect()
    }

    /// Converts an assignment into a matching of bank ids.
    pub fn to_matching(&self, assignment: &[Option<usize>]) -> Matching {
        let pairs: Vec<(BankId, BankId)> = assignment
            .iter()
            .enumerate()
            .filter_map(|(j, l)| l.map(|i| (self.quotes.lenders[i], self.quotes.borrowers[j])))
            .collect();
        // borrowers are sorted, so pairs already are
        Matching::from_sorted_pairs(pairs)
    }

    /// Converts a matching into an assignment, checking that it only pairs
    /// this market's lenders with its borrowers.
    pub fn assignment(&self, matching: &Matching) -> Result<Assignment, MatchingError> {
        let mut out = vec![None; self.borrower_count()];
        let mut used = vec![false; self.lender_count()];
        for &(l, b) in matching.pairs() {
            let i = self
                .lender_position(l)
                .ok_or(MatchingError::UnknownLender(l))?;
            let j = self
                .borrower_position(b)
                .ok_or(MatchingError::UnknownBorrower(b))?;
            if core::mem::replace(&mut used[i], true) {
                return Err(MatchingError::MatchedTwice(l));
            }
            if out[j].replace(i).is_some() {
                return Err(MatchingError::MatchedTwice(b));
            }
        }
        Ok(out)
    }

    /// Lexicographic key of an assignment: lender bank per borrower in
    /// borrower-id order, unmatched first.
    pub fn encode(&self, assignment: &[Option<usize>]) -> Vec<Option<BankId>> {
        assignment
            .iter()
            .map(|l| l.map(|i| self.quotes.lenders[i]))
            .collect()
    }
}

impl Matching {
    pub(crate) fn from_sorted_pairs(pairs: Vec<(BankId, BankId)>) -> Self {
        debug_assert!(pairs.windows(2).all(|w| w[0].1 < w[1].1));
        Matching { pairs }
    }
}

fn check_distinct(lenders: &[BankId], borrowers: &[BankId]) -> Result<(), MatchingError> {
    let mut all: Vec<(BankId, bool)> = lenders
        .iter()
        .map(|&b| (b, true))
        .chain(borrowers.iter().map(|&b| (b, false)))
        .collect();
    all.sort();
    for w in all.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(if w[0].1 == w[1].1 {
                MatchingError::DuplicateBank(w[0].0)
            } else {
                MatchingError::OverlappingSides(w[0].0)
            });
        }
    }
    Ok(())
}
