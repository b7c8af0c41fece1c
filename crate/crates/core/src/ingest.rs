//! Log ingestion: censored datasets, bidding policies, second-price
//! censorship simulation and dataset statistics.

use std::fmt;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{AuctionRecord, FullRecord, PriceGrid};
use crate::vocab::FeatureVocabulary;

/// Win/lose-partitioned auction logs plus the feature vocabulary.
#[derive(Debug, Clone)]
pub struct CensoredDataset {
    records: Vec<AuctionRecord>,
    vocabulary: FeatureVocabulary,
    win_idx: Vec<usize>,
    lose_idx: Vec<usize>,
}

impl CensoredDataset {
    /// Builds the vocabulary from the records themselves (training use).
    pub fn build(records: Vec<AuctionRecord>, min_count: usize) -> Result<Self> {
        let vocabulary = FeatureVocabulary::build(&records, min_count)?;
        Ok(Self::from_parts(records, vocabulary))
    }

    /// Attaches an existing vocabulary (evaluation use: the vocabulary must
    /// come from training data, never from the records scored here).
    pub fn from_parts(records: Vec<AuctionRecord>, vocabulary: FeatureVocabulary) -> Self {
        let (mut win_idx, mut lose_idx) = (Vec::new(), Vec::new());
        for (i, r) in records.iter().enumerate() {
            if r.won {
                win_idx.push(i);
            } else {
                lose_idx.push(i);
            }
        }
        Self {
            records,
            vocabulary,
            win_idx,
            lose_idx,
        }
    }

    pub fn records(&self) -> &[AuctionRecord] {
        &self.records
    }

    pub fn vocabulary(&self) -> &FeatureVocabulary {
        &self.vocabulary
    }

    pub fn wins(&self) -> impl Iterator<Item = &AuctionRecord> {
        self.win_idx.iter().map(|&i| &self.records[i])
    }

    pub fn losses(&self) -> impl Iterator<Item = &AuctionRecord> {
        self.lose_idx.iter().map(|&i| &self.records[i])
    }

    pub fn win_count(&self) -> usize {
        self.win_idx.len()
    }

    pub fn lose_count(&self) -> usize {
        self.lose_idx.len()
    }

    pub fn stats(&self) -> DatasetStats {
        DatasetStats::from_records(&self.records)
    }
}

/// Bidding strategy used to replay full-information logs.
#[derive(Debug, Clone, PartialEq)]
pub enum BidPolicy {
    /// Always bid the same price.
    Constant(u32),
    /// Bid uniformly at random in `[lo, hi]`.
    Uniform { lo: u32, hi: u32 },
    /// Bid `round(scale * utility)` where the utility is carried by the
    /// named feature field of each record.
    Truthful { scale: f64, field: String },
}

impl BidPolicy {
    /// Parses `constant:C`, `uniform:LO:HI` or `truthful:SCALE:FIELD`.
    pub fn parse(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(':').collect();
        let bad = |msg: String| Err(Error::Policy(msg));
        match parts.as_slice() {
            ["constant", c] => match c.parse() {
                Ok(c) => Ok(Self::Constant(c)),
                Err(_) => bad(format!("invalid constant bid `{c}`")),
            },
            ["uniform", lo, hi] => {
                let (Ok(lo), Ok(hi)) = (lo.parse(), hi.parse()) else {
                    return bad(format!("invalid uniform bounds `{lo}:{hi}`"));
                };
                if lo > hi || lo == 0 {
                    return bad(format!("uniform bounds must satisfy 1 <= lo <= hi, got {lo}:{hi}"));
                }
                Ok(Self::Uniform { lo, hi })
            }
            ["truthful", scale, field] => match scale.parse::<f64>() {
                Ok(scale) if scale.is_finite() && scale > 0.0 => Ok(Self::Truthful {
                    scale,
                    field: field.to_string(),
                }),
                _ => bad(format!("invalid truthful scale `{scale}`")),
            },
            _ => bad(format!(
                "`{spec}` (expected constant:C, uniform:LO:HI or truthful:SCALE:FIELD)"
            )),
        }
    }

    fn draw(&self, record: &FullRecord, grid: &PriceGrid, rng: &mut ChaCha8Rng) -> Result<u32> {
        let raw: i64 = match self {
            Self::Constant(c) => *c as i64,
            Self::Uniform { lo, hi } => rng.gen_range(*lo..=*hi) as i64,
            Self::Truthful { scale, field } => {
                let prefix = format!("{field}:");
                let value = record
                    .features
                    .iter()
                    .find_map(|t| t.strip_prefix(&prefix))
                    .ok_or_else(|| {
                        Error::Policy(format!("record is missing utility field `{field}`"))
                    })?;
                let utility: f64 = value.parse().map_err(|_| {
                    Error::Policy(format!("utility value `{value}` is not a number"))
                })?;
                (scale * utility).round() as i64
            }
        };
        if raw < 1 || raw > grid.max_interval() as i64 {
            return Err(Error::BidOutOfRange {
                bid: raw,
                max: grid.max_interval(),
            });
        }
        Ok(raw as u32)
    }
}

/// Replays full-information records under a bidding policy, producing the
/// censored logs an advertiser would actually observe: a bid above the
/// market price wins and keeps the price; anything else loses and the
/// price is erased. Deterministic given the seed.
pub fn simulate_censorship(
    full_records: &[FullRecord],
    policy: &BidPolicy,
    seed: u64,
    grid: &PriceGrid,
) -> Result<Vec<AuctionRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(full_records.len());
    for record in full_records {
        let bid = policy.draw(record, grid, &mut rng)?;
        let won = bid > record.price;
        let market_price = won.then_some(record.price as i64);
        out.push(AuctionRecord::validated(
            record.features.clone(),
            bid as i64,
            market_price,
            won,
            grid,
        )?);
    }
    Ok(out)
}

/// Aggregate statistics of a censored dataset.
///
/// The averaged market price is only knowable over `D_win`; for censored
/// records the averaged losing bid is reported instead, which is a lower
/// bound on their unobservable average market price.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetStats {
    pub total: usize,
    pub winning: usize,
    pub winning_rate: f64,
    pub amp_win: f64,
    pub avg_lose_bid_lower_bound: f64,
}

impl DatasetStats {
    pub fn from_records(records: &[AuctionRecord]) -> Self {
        let total = records.len();
        let mut winning = 0usize;
        let mut price_sum = 0.0;
        let mut lose_bid_sum = 0.0;
        for r in records {
            if let Some(z) = r.market_price {
                winning += 1;
                price_sum += z as f64;
            } else {
                lose_bid_sum += r.bid as f64;
            }
        }
        let losing = total - winning;
        Self {
            total,
            winning,
            winning_rate: if total == 0 { 0.0 } else { winning as f64 / total as f64 },
            amp_win: if winning == 0 { 0.0 } else { price_sum / winning as f64 },
            avg_lose_bid_lower_bound: if losing == 0 { 0.0 } else { lose_bid_sum / losing as f64 },
        }
    }

    pub fn to_kv(&self) -> String {
        format!(
            "total={}\nwinning={}\nwinning_rate={:.4}\namp_win={:.4}\navg_lose_bid_lower_bound={:.4}\n",
            self.total, self.winning, self.winning_rate, self.amp_win, self.avg_lose_bid_lower_bound
        )
    }
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "total records   {}", self.total)?;
        writeln!(f, "winning records {}", self.winning)?;
        writeln!(f, "winning rate    {:.4}", self.winning_rate)?;
        writeln!(f, "avg market price (wins) {:.4}", self.amp_win)?;
        write!(
            f,
            "avg losing bid  {:.4} (lower bound for censored market prices)",
            self.avg_lose_bid_lower_bound
        )
    }
}

/// Column layout for adapting raw tab-separated bidding logs.
///
/// The spec string is a comma-separated list of `name=column` entries.
/// Reserved names: `won`, `bid`, `price` (numeric columns) and `features`
/// (a column already holding space-separated tokens). Any other name
/// declares a categorical column whose value becomes a `name:value` token.
#[derive(Debug, Clone)]
pub struct LogSchema {
    won: Option<usize>,
    bid: Option<usize>,
    price: usize,
    features: Option<usize>,
    fields: Vec<(String, usize)>,
}

impl LogSchema {
    /// The canonical layout `won=0,bid=1,price=2,features=3`.
    pub fn canonical() -> Self {
        Self {
            won: Some(0),
            bid: Some(1),
            price: 2,
            features: Some(3),
            fields: Vec::new(),
        }
    }

    pub fn parse(spec: &str) -> Result<Self> {
        let mut won = None;
        let mut bid = None;
        let mut price = None;
        let mut features = None;
        let mut fields = Vec::new();
        for entry in spec.split(',') {
            let (name, col) = entry
                .split_once('=')
                .ok_or_else(|| Error::Schema(format!("entry `{entry}` is not name=column")))?;
            let col: usize = col
                .parse()
                .map_err(|_| Error::Schema(format!("invalid column index `{col}`")))?;
            match name {
                "won" => won = Some(col),
                "bid" => bid = Some(col),
                "price" => price = Some(col),
                "features" => features = Some(col),
                other => fields.push((other.to_string(), col)),
            }
        }
        let price = price.ok_or_else(|| Error::Schema("missing `price` column".into()))?;
        Ok(Self {
            won,
            bid,
            price,
            features,
            fields,
        })
    }

    fn columns<'a>(&self, line: &'a str) -> Vec<&'a str> {
        line.split('\t').collect()
    }

    fn get<'a>(&self, cols: &[&'a str], idx: usize, lineno: usize) -> Result<&'a str> {
        cols.get(idx).copied().ok_or_else(|| Error::Parse {
            line: lineno,
            msg: format!("missing column {idx}"),
        })
    }

    fn tokens(&self, cols: &[&str], lineno: usize) -> Result<Vec<String>> {
        let mut tokens = Vec::new();
        if let Some(fcol) = self.features {
            tokens.extend(
                self.get(cols, fcol, lineno)?
                    .split_whitespace()
                    .map(str::to_string),
            );
        }
        for (name, col) in &self.fields {
            let value = self.get(cols, *col, lineno)?;
            tokens.push(format!("{name}:{value}"));
        }
        Ok(tokens)
    }

    fn numeric(&self, cols: &[&str], idx: usize, lineno: usize) -> Result<i64> {
        let raw = self.get(cols, idx, lineno)?;
        raw.parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("invalid numeric field `{raw}`"),
        })
    }

    /// Parses a censored-log line into a validated record. Requires the
    /// schema to declare `won` and `bid` columns.
    pub fn parse_record_line(
        &self,
        line: &str,
        lineno: usize,
        grid: &PriceGrid,
    ) -> Result<Option<AuctionRecord>> {
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.is_empty() || trimmed.starts_with('#') {
            return Ok(None);
        }
        let won_col = self
            .won
            .ok_or_else(|| Error::Schema("schema declares no `won` column".into()))?;
        let bid_col = self
            .bid
            .ok_or_else(|| Error::Schema("schema declares no `bid` column".into()))?;
        let cols = self.columns(trimmed);
        let won = match self.get(&cols, won_col, lineno)? {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("invalid won flag `{other}`"),
                })
            }
        };
        let bid = self.numeric(&cols, bid_col, lineno)?;
        let price = self.numeric(&cols, self.price, lineno)?;
        let market_price = (price != -1).then_some(price);
        let record =
            AuctionRecord::validated(self.tokens(&cols, lineno)?, bid, market_price, won, grid)
                .map_err(|e| Error::Parse {
                    line: lineno,
                    msg: e.to_string(),
                })?;
        Ok(Some(record))
    }

    /// Parses a full-information line (impression logs: the price column
    /// carries the ground-truth market price; `won`/`bid` are ignored).
    pub fn parse_full_line(
        &self,
        line: &str,
        lineno: usize,
        grid: &PriceGrid,
    ) -> Result<Option<FullRecord>> {
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.is_empty() || trimmed.starts_with('#') {
            return Ok(None);
        }
        let cols = self.columns(trimmed);
        let price = self.numeric(&cols, self.price, lineno)?;
        if price < 0 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("full-information record has no usable price ({price})"),
            });
        }
        let price = grid.price_to_interval(price).map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        Ok(Some(FullRecord {
            features: self.tokens(&cols, lineno)?,
            price,
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> PriceGrid {
        PriceGrid::default()
    }

    fn full(price: u32) -> FullRecord {
        FullRecord {
            features: vec!["seg:a".into()],
            price,
        }
    }

    #[test]
    fn constant_policy_above_price_wins_and_keeps_price() {
        let records = vec![full(67)];
        let out = simulate_censorship(&records, &BidPolicy::Constant(80), 1, &grid()).unwrap();
        assert!(out[0].won);
        assert_eq!(out[0].market_price, Some(67));
        assert_eq!(out[0].bid, 80);
    }

    #[test]
    fn tie_bid_loses_and_erases_price() {
        let records = vec![full(67)];
        let out = simulate_censorship(&records, &BidPolicy::Constant(67), 1, &grid()).unwrap();
        assert!(!out[0].won);
        assert_eq!(out[0].market_price, None);
        assert_eq!(out[0].bid, 67);
    }

    #[test]
    fn winning_rate_matches_binomial_expectation() {
        // z uniform over 1..=100 and a constant bid of 51 wins exactly when
        // z < 51, probability 0.50.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let records: Vec<FullRecord> = (0..10_000).map(|_| full(rng.gen_range(1..=100))).collect();
        let out = simulate_censorship(&records, &BidPolicy::Constant(51), 7, &grid()).unwrap();
        let wr = out.iter().filter(|r| r.won).count() as f64 / out.len() as f64;
        let se = (0.5 * 0.5 / 10_000.0_f64).sqrt();
        assert!((wr - 0.5).abs() < 3.0 * se, "wr={wr}");
    }

    #[test]
    fn simulation_is_deterministic_and_partitions() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let records: Vec<FullRecord> = (0..500).map(|_| full(rng.gen_range(1..=300))).collect();
        let policy = BidPolicy::Uniform { lo: 1, hi: 300 };
        let a = simulate_censorship(&records, &policy, 42, &grid()).unwrap();
        let b = simulate_censorship(&records, &policy, 42, &grid()).unwrap();
        assert_eq!(a, b);
        let ds = CensoredDataset::build(a, 1).unwrap();
        assert_eq!(ds.win_count() + ds.lose_count(), ds.records().len());
    }

    #[test]
    fn censored_records_never_leak_the_price() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let records: Vec<FullRecord> = (0..2_000).map(|_| full(rng.gen_range(1..=300))).collect();
        let policy = BidPolicy::Uniform { lo: 1, hi: 300 };
        let out = simulate_censorship(&records, &policy, 11, &grid()).unwrap();
        for (orig, sim) in records.iter().zip(&out) {
            match sim.market_price {
                Some(z) => {
                    assert!(sim.won);
                    assert_eq!(z, orig.price);
                    assert!(sim.bid > z);
                }
                None => {
                    assert!(!sim.won);
                    assert!(sim.bid <= orig.price);
                }
            }
        }
    }

    #[test]
    fn out_of_range_policy_bid_errors() {
        let policy = BidPolicy::Constant(301);
        assert!(matches!(
            simulate_censorship(&[full(5)], &policy, 1, &grid()),
            Err(Error::BidOutOfRange { bid: 301, .. })
        ));
    }

    #[test]
    fn truthful_policy_scales_utility_field() {
        let record = FullRecord {
            features: vec!["utility:40.2".into()],
            price: 50,
        };
        let policy = BidPolicy::parse("truthful:2:utility").unwrap();
        let out = simulate_censorship(&[record], &policy, 1, &grid()).unwrap();
        assert_eq!(out[0].bid, 80);
        assert!(out[0].won);
    }

    #[test]
    fn policy_parse_accepts_valid_and_rejects_garbage() {
        assert_eq!(BidPolicy::parse("constant:80").unwrap(), BidPolicy::Constant(80));
        assert_eq!(
            BidPolicy::parse("uniform:1:300").unwrap(),
            BidPolicy::Uniform { lo: 1, hi: 300 }
        );
        assert!(BidPolicy::parse("uniform:0:10").is_err());
        assert!(BidPolicy::parse("uniform:9:3").is_err());
        assert!(BidPolicy::parse("nonsense").is_err());
    }

    #[test]
    fn stats_report_small_example() {
        let g = grid();
        let records = vec![
            AuctionRecord::validated(vec![], 30, Some(10), true, &g).unwrap(),
            AuctionRecord::validated(vec![], 30, Some(20), true, &g).unwrap(),
            AuctionRecord::validated(vec![], 40, None, false, &g).unwrap(),
            AuctionRecord::validated(vec![], 20, None, false, &g).unwrap(),
        ];
        let stats = DatasetStats::from_records(&records);
        assert_eq!(stats.total, 4);
        assert_eq!(stats.winning, 2);
        assert_eq!(stats.winning_rate, 0.5);
        assert_eq!(stats.amp_win, 15.0);
        assert_eq!(stats.avg_lose_bid_lower_bound, 30.0);
    }

    #[test]
    fn stats_report_empty_dataset_is_all_zero() {
        let stats = DatasetStats::from_records(&[]);
        assert_eq!(stats.total, 0);
        assert_eq!(stats.winning_rate, 0.0);
        assert_eq!(stats.amp_win, 0.0);
    }

    #[test]
    fn schema_parses_named_categorical_columns() {
        let schema = LogSchema::parse("won=0,bid=1,price=2,weekday=3,region=5").unwrap();
        let record = schema
            .parse_record_line("1\t80\t67\t3\tskip\t2", 1, &grid())
            .unwrap()
            .unwrap();
        assert_eq!(record.features, vec!["weekday:3", "region:2"]);
        assert_eq!(record.market_price, Some(67));
    }

    #[test]
    fn canonical_schema_matches_canonical_parser() {
        let schema = LogSchema::canonical();
        let record = schema
            .parse_record_line("1\t80\t67\tweekday:3 hour:21 region:2", 1, &grid())
            .unwrap()
            .unwrap();
        assert_eq!(record.features.len(), 3);
        assert_eq!(record.bid, 80);
    }

    #[test]
    fn schema_full_line_ignores_won_and_bid() {
        let schema = LogSchema::parse("price=1,slot=0").unwrap();
        let full = schema.parse_full_line("abc\t42", 1, &grid()).unwrap().unwrap();
        assert_eq!(full.price, 42);
        assert_eq!(full.features, vec!["slot:abc"]);
    }
}
