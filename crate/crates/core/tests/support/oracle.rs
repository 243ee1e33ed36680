//! Straight-line re-derivation of one simulation step, written against plain
//! arrays. It shares only the random stream and the initial state with the
//! engine; every update rule is spelled out again here.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::StandardNormal;
use trustsim_core::rng::Stream;
use trustsim_core::{ScenarioConfig, SimulationState};

pub struct Oracle {
    pub iteration: u64,
    pub opinion: Vec<f64>,
    pub trust: Vec<Vec<f64>>,
    pub emotion: Vec<[f64; 8]>,
    /// `(partner, feedback, iteration)`, oldest first.
    pub memory: Vec<VecDeque<(usize, f64, u64)>>,
    /// `alloc[agent][area]`.
    pub alloc: Vec<Vec<f64>>,
    pub reputation: Vec<f64>,
    pub overloaded: Vec<bool>,
    rng: Stream,
    // Static per-run data.
    friends: Vec<Vec<bool>>,
    traits: Vec<[f64; 5]>,
    integrity: Vec<f64>,
    monitored: Vec<bool>,
    priorities: Vec<Vec<f64>>,
    urgency: Vec<f64>,
    budget: f64,
}

fn clamp(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

impl Oracle {
    /// Copies an initial engine state into flat arrays.
    pub fn from_state(s: &SimulationState) -> Self {
        let n = s.agents.len();
        let friends = (0..n)
            .map(|i| (0..n).map(|j| s.graph.has_edge(i, j)).collect())
            .collect();
        Self {
            iteration: s.iteration,
            opinion: s.agents.iter().map(|a| a.opinion).collect(),
            trust: (0..n)
                .map(|i| (0..n).map(|j| s.trust.get(i, j)).collect())
                .collect(),
            emotion: s.agents.iter().map(|a| a.emotions.to_array()).collect(),
            memory: s
                .agents
                .iter()
                .map(|a| {
                    a.memory
                        .records()
                        .map(|r| (r.partner, r.feedback, r.iteration))
                        .collect()
                })
                .collect(),
            alloc: (0..n).map(|i| s.allocation.column(i).collect()).collect(),
            reputation: s.agents.iter().map(|a| a.reputation).collect(),
            overloaded: vec![false; n],
            rng: s.rng.clone(),
            friends,
            traits: s.agents.iter().map(|a| a.personality.to_array()).collect(),
            integrity: s.agents.iter().map(|a| a.moral_integrity).collect(),
            monitored: s.agents.iter().map(|a| a.monitored).collect(),
            priorities: s.agents.iter().map(|a| a.priorities.clone()).collect(),
            urgency: s.urgency.clone(),
            budget: s.agents.first().map_or(0.0, |a| a.budget),
        }
    }

    /// One iteration. Configs with events are not supported.
    pub fn step(&mut self, cfg: &ScenarioConfig) {
        assert!(cfg.events.is_empty(), "oracle does not model events");
        let c = &cfg.coefficients;
        let n = self.opinion.len();
        self.iteration += 1;
        let now = self.iteration;
        let start = self.opinion.clone();
        const OPENNESS: usize = 0;
        const EXTRAVERSION: usize = 2;
        const AGREEABLENESS: usize = 3;
        const NEUROTICISM: usize = 4;

        // Partner selection.
        let mut requests = Vec::new();
        for i in 0..n {
            let k = 1 + (2.0 * self.traits[i][EXTRAVERSION]).round() as usize;
            let mut cand: Vec<(usize, f64)> = Vec::new();
            for j in 0..n {
                if j == i {
                    continue;
                }
                let mut sum = 0.0;
                let mut cnt = 0;
                for &(p, f, _) in &self.memory[i] {
                    if p == j {
                        sum += f;
                        cnt += 1;
                    }
                }
                let mean = if cnt > 0 { sum / cnt as f64 } else { 0.0 };
                let mult = 1.0 + c.learning_gain * if mean > 0.0 { mean } else { 0.0 };
                let base = 0.05 + if self.friends[i][j] { 1.0 } else { 0.0 };
                cand.push((j, base * mult));
            }
            let picks = k.min(cand.len());
            for _ in 0..picks {
                let total: f64 = cand.iter().map(|x| x.1).sum();
                let u: f64 = self.rng.random::<f64>() * total;
                let mut acc = 0.0;
                let mut idx = cand.len() - 1;
                for (pos, x) in cand.iter().enumerate() {
                    acc += x.1;
                    if u < acc {
                        idx = pos;
                        break;
                    }
                }
                requests.push((i, cand.remove(idx).0));
            }
        }

        // Capacity.
        let mut arrivals = vec![0usize; n];
        let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
        for &(i, j) in &requests {
            if arrivals[j] < c.capacity {
                let f = 1.0 - 2.0 * (start[i] - start[j]).abs();
                pairs.push((i, j, f));
            }
            arrivals[j] += 1;
        }
        for (flag, &count) in self.overloaded.iter_mut().zip(&arrivals) {
            *flag = count > c.capacity;
        }

        // Opinions from the start-of-step snapshot.
        let mut next = start.clone();
        for i in 0..n {
            let mut wsum = 0.0;
            let mut wo = 0.0;
            let mut osum = 0.0;
            let mut cnt = 0usize;
            for &(a, b, _) in &pairs {
                let other = if a == i {
                    b
                } else if b == i {
                    a
                } else {
                    continue;
                };
                let w = self.trust[i][other];
                wsum += w;
                wo += w * start[other];
                osum += start[other];
                cnt += 1;
            }
            let t = self.traits[i];
            let mut alpha = c.conformity * t[AGREEABLENESS];
            let mut sigma = c.opinion_noise * (0.5 + t[NEUROTICISM]);
            if self.overloaded[i] {
                alpha /= 2.0;
                sigma *= 2.0;
            }
            let p_con = c.contrarian_probability * (1.0 - t[AGREEABLENESS]) * t[OPENNESS];
            let contrarian = self.rng.random::<f64>() < p_con;
            let z = loop {
                let z: f64 = self.rng.sample(StandardNormal);
                if z.abs() <= 3.0 {
                    break z;
                }
            };
            let xi = sigma * z;
            if cnt == 0 {
                next[i] = clamp(start[i] + xi);
                continue;
            }
            let m = if wsum > 0.0 {
                wo / wsum
            } else {
                osum / cnt as f64
            };
            next[i] = if contrarian {
                clamp(start[i] - alpha * (m - start[i]) + xi)
            } else {
                clamp((1.0 - alpha) * start[i] + alpha * m + xi)
            };
        }
        self.opinion = next;

        // Trust.
        let primary: Vec<usize> = self
            .alloc
            .iter()
            .map(|col| {
                let mut best = 0;
                for a in 1..col.len() {
                    if col[a] > col[best] {
                        best = a;
                    }
                }
                best
            })
            .collect();
        for &(a, b, f) in &pairs {
            for (x, y) in [(a, b), (b, a)] {
                let licensed = self.friends[x][y]
                    || primary[x] == primary[y]
                    || self.integrity[y] >= c.integrity_threshold
                    || (cfg.monitoring_enabled && self.monitored[y]);
                let gate = if licensed {
                    1.0
                } else {
                    let total = self.memory[x].iter().filter(|r| r.0 == y).count();
                    let pos = self.memory[x]
                        .iter()
                        .filter(|r| r.0 == y && r.1 > 0.0)
                        .count();
                    if total >= c.min_history
                        && pos as f64 / total as f64 >= c.reliability_threshold
                    {
                        c.history_certainty
                    } else {
                        c.ungated_gain
                    }
                };
                let t = self.trust[x][y];
                self.trust[x][y] = if f >= 0.0 {
                    clamp(t + c.trust_rate * f * gate)
                } else {
                    clamp(t + c.trust_rate * f)
                };
            }
        }

        // Memory.
        for &(a, b, f) in &pairs {
            for (x, y) in [(a, b), (b, a)] {
                let f = f.clamp(-1.0, 1.0);
                self.memory[x].push_back((y, f, now));
                if self.memory[x].len() > c.memory_capacity {
                    self.memory[x].pop_front();
                }
            }
        }

        // Emotions. Channel order: joy, trust_e, fear, surprise, sadness,
        // disgust, anger, anticipation.
        let base = c.emotion_baseline.to_array();
        for i in 0..n {
            let mut s = [0.0; 8];
            for &(a, b, f) in &pairs {
                if a != i && b != i {
                    continue;
                }
                if f > 0.0 {
                    s[0] += f * c.stimulus_gain;
                    s[1] += f * c.stimulus_gain;
                } else if f < 0.0 {
                    s[4] += -f * c.stimulus_gain;
                    s[6] += -f * c.stimulus_gain;
                }
            }
            let g = 1.0 + c.neuroticism_gain * self.traits[i][NEUROTICISM];
            let e = self.emotion[i];
            let opposite = [4, 5, 6, 7, 0, 1, 2, 3];
            for k in 0..8 {
                self.emotion[i][k] = clamp(
                    e[k] + c.emotion_decay * (base[k] - e[k]) + g * s[k]
                        - c.opposite_coupling * g * s[opposite[k]],
                );
            }
        }

        // Allocation.
        for i in 0..n {
            let v: Vec<f64> = (0..self.urgency.len())
                .map(|a| {
                    self.urgency[a]
                        * (1.0 + c.priority_coupling * self.opinion[i] * self.priorities[i][a])
                })
                .collect();
            let total: f64 = v.iter().sum();
            self.alloc[i] = if total > 0.0 {
                v.iter().map(|x| self.budget * x / total).collect()
            } else {
                vec![self.budget / v.len() as f64; v.len()]
            };
        }

        // Reputation.
        for j in 0..n {
            self.reputation[j] = if n < 2 {
                1.0
            } else {
                (0..n)
                    .filter(|&i| i != j)
                    .map(|i| self.trust[i][j])
                    .sum::<f64>()
                    / (n - 1) as f64
            };
        }
    }

    /// Largest absolute difference over every compared field, or a
    /// description of a structural mismatch.
    pub fn compare(&self, s: &SimulationState) -> Result<f64, String> {
        let n = self.opinion.len();
        if s.iteration != self.iteration {
            return Err(format!("iteration {} vs {}", s.iteration, self.iteration));
        }
        let mut worst = 0.0f64;
        let mut upd = |a: f64, b: f64| worst = worst.max((a - b).abs());
        for i in 0..n {
            let a = &s.agents[i];
            upd(a.opinion, self.opinion[i]);
            upd(a.reputation, self.reputation[i]);
            for (x, y) in a.emotions.to_array().iter().zip(&self.emotion[i]) {
                upd(*x, *y);
            }
            for j in 0..n {
                upd(s.trust.get(i, j), self.trust[i][j]);
            }
            for (x, y) in s.allocation.column(i).zip(&self.alloc[i]) {
                upd(x, *y);
            }
            if a.overloaded != self.overloaded[i] {
                return Err(format!("agent {i} overload flag differs"));
            }
            let recs: Vec<_> = a.memory.records().collect();
            if recs.len() != self.memory[i].len() {
                return Err(format!(
                    "agent {i} memory length {} vs {}",
                    recs.len(),
                    self.memory[i].len()
                ));
            }
            for (r, o) in recs.iter().zip(&self.memory[i]) {
                if r.partner != o.0 || r.iteration != o.2 {
                    return Err(format!("agent {i} memory record differs"));
                }
                upd(r.feedback, o.1);
            }
        }
        Ok(worst)
    }
}
