//! Leduc hold'em with a configurable number of ranks.
//!
//! The deck holds two copies of each rank `0..k`. Both players ante, receive
//! one private card each, bet, see one community card, and bet again. A
//! player whose card pairs the community card wins the showdown; otherwise
//! the higher rank wins, and equal ranks split the pot.

use serde::{Deserialize, Serialize};

use super::game::{GameBuilder, GameTree, NodeId, Player};
use super::EfgError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeducConfig {
    /// Number of distinct ranks; the deck has `2 * ranks` cards.
    pub ranks: usize,
    pub ante: f64,
    /// Bet (and raise) size in each of the two rounds.
    pub bet_sizes: [f64; 2],
    /// Maximum number of bets plus raises per round.
    pub max_bets: [usize; 2],
}

impl LeducConfig {
    pub fn new(ranks: usize) -> Self {
        Self {
            ranks,
            ..Self::default()
        }
    }

    pub fn deck_size(&self) -> usize {
        2 * self.ranks
    }

    /// Largest total pot reachable under these rules.
    pub fn max_pot(&self) -> f64 {
        2.0 * (self.ante
            + self.bet_sizes[0] * self.max_bets[0] as f64
            + self.bet_sizes[1] * self.max_bets[1] as f64)
    }

    pub fn validate(&self) -> Result<(), EfgError> {
        if self.ranks < 2 {
            return Err(EfgError::Config("leduc needs at least 2 ranks".into()));
        }
        if !(self.ante > 0.0) || self.bet_sizes.iter().any(|&b| !(b > 0.0)) {
            return Err(EfgError::Config(
                "ante and bet sizes must be positive".into(),
            ));
        }
        Ok(())
    }
}

impl Default for LeducConfig {
    fn default() -> Self {
        Self {
            ranks: 3,
            ante: 1.0,
            bet_sizes: [2.0, 4.0],
            max_bets: [2, 2],
        }
    }
}

#[derive(Clone)]
struct Betting {
    round: usize,
    contrib: [f64; 2],
    bets: usize,
    to_act: Player,
    facing_bet: bool,
    /// Set once the first player of the round has checked.
    checked: bool,
    history: [String; 2],
}

struct Deal {
    cards: [usize; 2],
    community: Option<usize>,
}

pub fn build_leduc(cfg: &LeducConfig) -> Result<GameTree, EfgError> {
    cfg.validate()?;
    let deck = cfg.deck_size();
    let mut b = GameBuilder::new();
    let deal_prob = 1.0 / (deck * (deck - 1)) as f64;
    let mut outcomes = Vec::with_capacity(deck * (deck - 1));
    for c1 in 0..deck {
        for c2 in 0..deck {
            if c1 == c2 {
                continue;
            }
            let state = Betting {
                round: 0,
                contrib: [cfg.ante; 2],
                bets: 0,
                to_act: Player::One,
                facing_bet: false,
                checked: false,
                history: [String::new(), String::new()],
            };
            let deal = Deal {
                cards: [c1, c2],
                community: None,
            };
            outcomes.push((deal_prob, betting_node(&mut b, cfg, &deal, state)));
        }
    }
    let root = b.chance(outcomes);
    b.build(root)
}

fn rank(card: usize) -> usize {
    card / 2
}

fn infoset_name(player: Player, deal: &Deal, s: &Betting) -> String {
    let own = rank(deal.cards[player.index()]);
    match deal.community {
        None => format!("{}:{}:{}", player_tag(player), own, s.history[0]),
        Some(c) => format!(
            "{}:{}:{}:{}/{}",
            player_tag(player),
            own,
            rank(c),
            s.history[0],
            s.history[1]
        ),
    }
}

fn player_tag(p: Player) -> &'static str {
    match p {
        Player::One => "P1",
        Player::Two => "P2",
    }
}

fn betting_node(b: &mut GameBuilder, cfg: &LeducConfig, deal: &Deal, s: Betting) -> NodeId {
    let name = infoset_name(s.to_act, deal, &s);
    let me = s.to_act.index();
    let bet = cfg.bet_sizes[s.round];
    let can_raise = s.bets < cfg.max_bets[s.round];
    let mut labels: Vec<&str> = Vec::new();
    let mut children = Vec::new();
    let after = |s: &Betting, action: char| {
        let mut n = s.clone();
        n.history[s.round].push(action);
        n
    };
    if s.facing_bet {
        labels.push("f");
        // Folding forfeits the folder's contribution to the opponent.
        let payoff = if s.to_act == Player::One {
            s.contrib[0]
        } else {
            -s.contrib[1]
        };
        children.push(b.terminal(payoff));

        labels.push("c");
        let mut n = after(&s, 'c');
        n.contrib[me] = n.contrib[1 - me];
        children.push(end_round(b, cfg, deal, n));

        if can_raise {
            labels.push("r");
            let mut n = after(&s, 'r');
            n.contrib[me] = n.contrib[1 - me] + bet;
            n.bets += 1;
            n.to_act = s.to_act.opponent();
            children.push(betting_node(b, cfg, deal, n));
        }
    } else {
        labels.push("k");
        let mut n = after(&s, 'k');
        if s.checked {
            children.push(end_round(b, cfg, deal, n));
        } else {
            n.checked = true;
            n.to_act = s.to_act.opponent();
            children.push(betting_node(b, cfg, deal, n));
        }
        if can_raise {
            labels.push("b");
            let mut n = after(&s, 'b');
            n.contrib[me] += bet;
            n.bets += 1;
            n.facing_bet = true;
            n.to_act = s.to_act.opponent();
            children.push(betting_node(b, cfg, deal, n));
        }
    }
    b.decision(s.to_act, &name, &labels, children)
}

fn end_round(b: &mut GameBuilder, cfg: &LeducConfig, deal: &Deal, s: Betting) -> NodeId {
    if s.round == 1 {
        return b.terminal(showdown(deal, s.contrib));
    }
    let remaining: Vec<usize> = (0..cfg.deck_size())
        .filter(|c| !deal.cards.contains(c))
        .collect();
    let p = 1.0 / remaining.len() as f64;
    let outcomes = remaining
        .iter()
        .map(|&c| {
            let next = Betting {
                round: 1,
                contrib: s.contrib,
                bets: 0,
                to_act: Player::One,
                facing_bet: false,
                checked: false,
                history: s.history.clone(),
            };
            let d = Deal {
                cards: deal.cards,
                community: Some(c),
            };
            (p, betting_node(b, cfg, &d, next))
        })
        .collect();
    b.chance(outcomes)
}

/// Payoff to player two at showdown.
fn showdown(deal: &Deal, contrib: [f64; 2]) -> f64 {
    let community = rank(deal.community.expect("showdown after the community card"));
    let r1 = rank(deal.cards[0]);
    let r2 = rank(deal.cards[1]);
    let score = |r: usize| if r == community { usize::MAX } else { r };
    match score(r1).cmp(&score(r2)) {
        std::cmp::Ordering::Greater => -contrib[1],
        std::cmp::Ordering::Less => contrib[0],
        std::cmp::Ordering::Equal => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efg::game::Node;

    #[test]
    fn root_deals_every_ordered_pair() {
        let g = build_leduc(&LeducConfig::new(3)).unwrap();
        match g.node(g.root()) {
            Node::Chance { outcomes } => assert_eq!(outcomes.len(), 30),
            other => panic!("root should be chance, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_config() {
        assert!(build_leduc(&LeducConfig::new(1)).is_err());
        let cfg = LeducConfig {
            bet_sizes: [0.0, 4.0],
            ..LeducConfig::default()
        };
        assert!(build_leduc(&cfg).is_err());
    }

    #[test]
    fn max_pot_default() {
        assert_eq!(LeducConfig::default().max_pot(), 26.0);
    }

    #[test]
    fn showdown_rules() {
        let contrib = [3.0, 3.0];
        // Player one pairs the community card.
        let d = Deal {
            cards: [0, 4],
            community: Some(1),
        };
        assert_eq!(showdown(&d, contrib), -3.0);
        // No pair, player two holds the higher rank.
        let d = Deal {
            cards: [0, 4],
            community: Some(2),
        };
        assert_eq!(showdown(&d, contrib), 3.0);
        // Same rank splits.
        let d = Deal {
            cards: [4, 5],
            community: Some(0),
        };
        assert_eq!(showdown(&d, contrib), 0.0);
    }

    /// Follows the first (check/call) action everywhere and collects every
    /// payoff reached.
    fn passive_payoffs(g: &GameTree, id: usize, out: &mut Vec<f64>) {
        match g.node(id) {
            Node::Terminal { payoff } => out.push(*payoff),
            Node::Chance { outcomes } => outcomes
                .iter()
                .for_each(|&(_, c)| passive_payoffs(g, c, out)),
            Node::Decision { children, .. } => passive_payoffs(g, children[0], out),
        }
    }

    #[test]
    fn check_down_pays_the_ante() {
        let g = build_leduc(&LeducConfig::new(2)).unwrap();
        let mut payoffs = Vec::new();
        passive_payoffs(&g, g.root(), &mut payoffs);
        assert!(!payoffs.is_empty());
        assert!(payoffs.iter().all(|p| [-1.0, 0.0, 1.0].contains(p)));
    }
}
