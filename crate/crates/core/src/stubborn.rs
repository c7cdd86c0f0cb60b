//! From per-tweet opinion scores to stubborn anchors and posting rates.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

/// One tweet: author, optional text, optional opinion score in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TweetRecord {
    pub user_id: String,
    pub text: Option<String>,
    pub score: Option<f64>,
    pub timestamp: Option<String>,
}

impl TweetRecord {
    pub fn scored(user_id: impl Into<String>, score: f64) -> Self {
        Self {
            user_id: user_id.into(),
            text: None,
            score: Some(score),
            timestamp: None,
        }
    }
}

/// Turns tweet text into an opinion score, or `None` when it cannot decide.
pub trait TextScorer {
    fn score(&self, text: &str) -> Option<f64>;
}

/// Mean tweet score per user. Users without any scored tweet are absent.
///
/// Every record must carry a score; run text-only records through a
/// [`TextScorer`] first (see [`score_tweets`]).
pub fn user_opinions<'a>(tweets: impl IntoIterator<Item = &'a TweetRecord>) -> Result<BTreeMap<String, f64>> {
    let mut acc: BTreeMap<String, (f64, u64)> = BTreeMap::new();
    for (k, t) in tweets.into_iter().enumerate() {
        let score = t.score.ok_or_else(|| Error::InvalidParameter(format!(
            "tweet {} by {} has no score",
            k + 1,
            t.user_id
        )))?;
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::ScoreOutOfRange {
                record: format!("tweet {} by {}", k + 1, t.user_id),
                score,
            });
        }
        let e = acc.entry(t.user_id.clone()).or_insert((0.0, 0));
        e.0 += score;
        e.1 += 1;
    }
    Ok(acc
        .into_iter()
        .map(|(u, (sum, count))| (u, sum / count as f64))
        .collect())
}

/// Fills missing scores from the text using `scorer`; records it cannot
/// score are dropped.
pub fn score_tweets<S: TextScorer>(tweets: &[TweetRecord], scorer: &S) -> Vec<TweetRecord> {
    tweets
        .iter()
        .filter_map(|t| {
            let score = t
                .score
                .or_else(|| t.text.as_deref().and_then(|x| scorer.score(x)))?;
            Some(TweetRecord {
                score: Some(score),
                ..t.clone()
            })
        })
        .collect()
}

/// Number of tweets per user, duplicates included.
pub fn assign_rates<'a>(tweets: impl IntoIterator<Item = &'a TweetRecord>) -> BTreeMap<String, f64> {
    let mut rates = BTreeMap::new();
    for t in tweets {
        *rates.entry(t.user_id.clone()).or_insert(0.0) += 1.0;
    }
    rates
}

/// How phrases are matched against a profile description.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatchMode {
    /// Case-insensitive substring.
    #[default]
    Substring,
    /// Case-insensitive whole token; tokens are split on anything that is not
    /// alphanumeric, `_` or `-`, and a leading `#` or `@` is ignored.
    Token,
}

/// Phrases signalling a strong opinion for (1) or against (0) the topic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhraseLexicon {
    pro: Vec<String>,
    anti: Vec<String>,
    mode: MatchMode,
}

impl PhraseLexicon {
    pub fn new<I, J, S, T>(pro: I, anti: J, mode: MatchMode) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let norm = |s: &str| s.trim().to_lowercase();
        let pro: BTreeSet<String> = pro.into_iter().map(|s| norm(s.as_ref())).filter(|s| !s.is_empty()).collect();
        let anti: BTreeSet<String> = anti.into_iter().map(|s| norm(s.as_ref())).filter(|s| !s.is_empty()).collect();
        if let Some(both) = pro.intersection(&anti).next() {
            return Err(Error::InvalidParameter(format!(
                "phrase {both:?} is listed as both pro and anti"
            )));
        }
        Ok(Self {
            pro: pro.into_iter().collect(),
            anti: anti.into_iter().collect(),
            mode,
        })
    }

    pub fn mode(&self) -> MatchMode {
        self.mode
    }

    pub fn pro(&self) -> &[String] {
        &self.pro
    }

    pub fn anti(&self) -> &[String] {
        &self.anti
    }

    /// 1 for pro-only matches, 0 for anti-only, `None` for neither or both.
    pub fn classify(&self, description: &str) -> Option<f64> {
        let text = description.to_lowercase();
        let tokens: BTreeSet<&str> = match self.mode {
            MatchMode::Token => text
                .split(|c: char| !(c.is_alphanumeric() || c == '_' || c == '-' || c == '#' || c == '@'))
                .map(|t| t.trim_start_matches(['#', '@']))
                .filter(|t| !t.is_empty())
                .collect(),
            MatchMode::Substring => BTreeSet::new(),
        };
        let hit = |phrases: &[String]| {
            phrases.iter().any(|p| match self.mode {
                MatchMode::Substring => text.contains(p.as_str()),
                MatchMode::Token => tokens.contains(p.trim_start_matches(['#', '@'])),
            })
        };
        match (hit(&self.pro), hit(&self.anti)) {
            (true, false) => Some(1.0),
            (false, true) => Some(0.0),
            _ => None,
        }
    }
}

impl TextScorer for PhraseLexicon {
    fn score(&self, text: &str) -> Option<f64> {
        self.classify(text)
    }
}

/// Labels users by the phrases in their profile description.
pub fn label_by_profile_phrases<'a>(
    profiles: impl IntoIterator<Item = (&'a str, &'a str)>,
    lexicon: &PhraseLexicon,
) -> BTreeMap<String, f64> {
    profiles
        .into_iter()
        .filter_map(|(user, desc)| lexicon.classify(desc).map(|o| (user.to_owned(), o)))
        .collect()
}

/// Stubborn intervals `[0, lower]` and `[upper, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StubbornConfig {
    lower: f64,
    upper: f64,
}

impl StubbornConfig {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(0.0 <= lower && lower < upper && upper <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "stubborn intervals need 0 <= a < b <= 1, got a = {lower}, b = {upper}"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn is_extreme(&self, opinion: f64) -> bool {
        opinion <= self.lower || opinion >= self.upper
    }
}

impl Default for StubbornConfig {
    fn default() -> Self {
        Self {
            lower: 0.1,
            upper: 0.9,
        }
    }
}

/// Split of the users with an opinion into stubborn and non-stubborn.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StubbornSplit {
    /// Stubborn users with their anchor opinion `Ψ`.
    pub stubborn: BTreeMap<String, f64>,
    /// Non-stubborn users with their measured opinion.
    pub free: BTreeMap<String, f64>,
}

/// Users with extreme opinions, plus every `forced` user, become stubborn.
pub fn classify_stubborn(
    opinions: &BTreeMap<String, f64>,
    cfg: &StubbornConfig,
    forced: &BTreeSet<String>,
) -> Result<StubbornSplit> {
    if let Some(missing) = forced.iter().find(|u| !opinions.contains_key(*u)) {
        return Err(Error::MissingOpinion(missing.clone()));
    }
    let mut split = StubbornSplit::default();
    for (user, &o) in opinions {
        if !(0.0..=1.0).contains(&o) {
            return Err(Error::ScoreOutOfRange {
                record: user.clone(),
                score: o,
            });
        }
        if cfg.is_extreme(o) || forced.contains(user) {
            split.stubborn.insert(user.clone(), o);
        } else {
            split.free.insert(user.clone(), o);
        }
    }
    Ok(split)
}
