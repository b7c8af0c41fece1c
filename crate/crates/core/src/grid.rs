//! Discrete price axis and the auction-record data model.
//!
//! Prices are integers on a grid of `L` unit-width intervals; interval `l`
//! (1-based) holds the integer price `l`. A logged second-price auction is
//! either a win, where the paid market price is observed, or a loss, where
//! only `market price >= bid` is known (right-censored). Ties lose: a bid
//! equal to the market price does not win the auction.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Default number of price intervals.
pub const DEFAULT_MAX_INTERVAL: u32 = 300;

/// The discrete price axis: `L` unit-width intervals over integer prices `1..=L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PriceGrid {
    max_interval: u32,
}

impl Default for PriceGrid {
    fn default() -> Self {
        Self {
            max_interval: DEFAULT_MAX_INTERVAL,
        }
    }
}

impl PriceGrid {
    pub fn new(max_interval: u32) -> Result<Self> {
        if max_interval == 0 {
            return Err(Error::InvalidGrid);
        }
        Ok(Self { max_interval })
    }

    pub fn max_interval(&self) -> u32 {
        self.max_interval
    }

    /// Interval index of an integer price: `clamp(price, 1, L)`.
    ///
    /// Prices of 0 (free impressions in raw logs) clamp up to 1 and prices
    /// above the grid clamp down to `L`. Negative prices are rejected.
    pub fn price_to_interval(&self, price: i64) -> Result<u32> {
        if price < 0 {
            return Err(Error::NegativePrice(price));
        }
        Ok((price as u64).clamp(1, self.max_interval as u64) as u32)
    }

    /// Number of intervals strictly below `bid`: `clamp(bid, 1, L+1) - 1`.
    ///
    /// This is the number of conditional losing factors that enter the
    /// survival value `S(bid)`, and the unroll depth of a censored record.
    pub fn censor_depth(&self, bid: u32) -> u32 {
        bid.clamp(1, self.max_interval + 1) - 1
    }
}

/// One logged auction after validation.
///
/// Invariants hold by construction: `won` exactly when `market_price` is
/// present, and an observed price lies strictly below the bid; both prices
/// are clamped onto the grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuctionRecord {
    /// Categorical `field:value` tokens describing the auction request.
    pub features: Vec<String>,
    /// Bid price in integer price units, in `[1, L]`.
    pub bid: u32,
    /// Paid market price, present exactly for winning records.
    pub market_price: Option<u32>,
    /// Whether the bid won the auction (`bid > market_price`).
    pub won: bool,
}

impl AuctionRecord {
    /// Clamps raw prices onto the grid and enforces the win/censor invariant.
    pub fn validated(
        features: Vec<String>,
        bid: i64,
        market_price: Option<i64>,
        won: bool,
        grid: &PriceGrid,
    ) -> Result<Self> {
        let bid = grid.price_to_interval(bid)?;
        let market_price = match market_price {
            Some(z) => Some(grid.price_to_interval(z)?),
            None => None,
        };
        match (won, market_price) {
            (true, None) => Err(Error::WinMissingPrice),
            (true, Some(z)) if z >= bid => Err(Error::WinPriceNotBelowBid { price: z, bid }),
            (false, Some(_)) => Err(Error::LoseWithPrice),
            _ => Ok(Self {
                features,
                bid,
                market_price,
                won,
            }),
        }
    }

    /// Re-validates an existing record; idempotent on valid records.
    pub fn validate(self, grid: &PriceGrid) -> Result<Self> {
        Self::validated(
            self.features,
            self.bid as i64,
            self.market_price.map(|z| z as i64),
            self.won,
            grid,
        )
    }

    /// Unroll depth of this record: intervals strictly below the bid.
    pub fn depth(&self, grid: &PriceGrid) -> u32 {
        grid.censor_depth(self.bid)
    }
}

/// A full-information auction with its ground-truth market price.
///
/// Produced by the synthetic market generator or ingested from raw
/// impression logs; the censorship simulator re-bids each of these to
/// manufacture win/lose partitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FullRecord {
    pub features: Vec<String>,
    /// Ground-truth market price, in `[1, L]`.
    pub price: u32,
}

fn parse_features(field: &str) -> Vec<String> {
    field.split_whitespace().map(str::to_string).collect()
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn split_line(line: &str, lineno: usize) -> Result<[&str; 4]> {
    let mut parts = line.splitn(4, '\t');
    let won = parts
        .next()
        .ok_or_else(|| parse_err(lineno, "empty line"))?;
    let bid = parts
        .next()
        .ok_or_else(|| parse_err(lineno, "missing bid column"))?;
    let price = parts
        .next()
        .ok_or_else(|| parse_err(lineno, "missing price column"))?;
    let features = parts.next().unwrap_or("");
    Ok([won, bid, price, features])
}

/// Parses one canonical record line `won<TAB>bid<TAB>price<TAB>features`.
///
/// `price` is `-1` for censored records; comment lines starting with `#`
/// and blank lines yield `None`.
pub fn parse_canonical_line(
    line: &str,
    lineno: usize,
    grid: &PriceGrid,
) -> Result<Option<AuctionRecord>> {
    let trimmed = line.trim_end_matches(['\r', '\n']);
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return Ok(None);
    }
    let [won_s, bid_s, price_s, features_s] = split_line(trimmed, lineno)?;
    let won = match won_s {
        "0" => false,
        "1" => true,
        other => return Err(parse_err(lineno, format!("invalid won flag `{other}`"))),
    };
    let bid: i64 = bid_s
        .parse()
        .map_err(|_| parse_err(lineno, format!("invalid bid `{bid_s}`")))?;
    let price: i64 = price_s
        .parse()
        .map_err(|_| parse_err(lineno, format!("invalid price `{price_s}`")))?;
    let market_price = if price == -1 { None } else { Some(price) };
    let record = AuctionRecord::validated(parse_features(features_s), bid, market_price, won, grid)
        .map_err(|e| parse_err(lineno, e.to_string()))?;
    Ok(Some(record))
}

/// Formats a record as a canonical line (without trailing newline).
pub fn format_canonical_line(record: &AuctionRecord) -> String {
    format!(
        "{}\t{}\t{}\t{}",
        record.won as u8,
        record.bid,
        record
            .market_price
            .map_or_else(|| "-1".to_string(), |z| z.to_string()),
        record.features.join(" ")
    )
}

/// Parses one full-information line. The `won`/`bid` columns are
/// placeholders here (the simulator re-bids); only a present, non-negative
/// price is required.
pub fn parse_full_line(line: &str, lineno: usize, grid: &PriceGrid) -> Result<Option<FullRecord>> {
    let trimmed = line.trim_end_matches(['\r', '\n']);
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return Ok(None);
    }
    let [_, _, price_s, features_s] = split_line(trimmed, lineno)?;
    let price: i64 = price_s
        .parse()
        .map_err(|_| parse_err(lineno, format!("invalid price `{price_s}`")))?;
    if price == -1 {
        return Err(parse_err(
            lineno,
            "full-information record has a censored price",
        ));
    }
    let price = grid
        .price_to_interval(price)
        .map_err(|e| parse_err(lineno, e.to_string()))?;
    Ok(Some(FullRecord {
        features: parse_features(features_s),
        price,
    }))
}

/// Formats a full-information record; the bid column carries the grid
/// maximum as a placeholder so the file stays in the canonical shape.
pub fn format_full_line(record: &FullRecord, grid: &PriceGrid) -> String {
    format!(
        "1\t{}\t{}\t{}",
        grid.max_interval(),
        record.price,
        record.features.join(" ")
    )
}

pub fn read_canonical_file(path: impl AsRef<Path>, grid: &PriceGrid) -> Result<Vec<AuctionRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        if let Some(record) = parse_canonical_line(&line?, idx + 1, grid)? {
            records.push(record);
        }
    }
    Ok(records)
}

pub fn write_canonical_file(path: impl AsRef<Path>, records: &[AuctionRecord]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for record in records {
        writeln!(out, "{}", format_canonical_line(record))?;
    }
    Ok(())
}

pub fn read_full_file(path: impl AsRef<Path>, grid: &PriceGrid) -> Result<Vec<FullRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        if let Some(record) = parse_full_line(&line?, idx + 1, grid)? {
            records.push(record);
        }
    }
    Ok(records)
}

pub fn write_full_file(
    path: impl AsRef<Path>,
    records: &[FullRecord],
    grid: &PriceGrid,
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for record in records {
        writeln!(out, "{}", format_full_line(record, grid))?;
    }
    Ok(())
}
