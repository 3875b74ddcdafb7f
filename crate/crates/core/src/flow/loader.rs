//! Discrete-time link transmission loading of whole vehicles.
//!
//! Every simulation step each link offers a sending budget (vehicles that
//! have completed free-flow traversal, capped by capacity) and a receiving
//! budget (capacity, and the backward-wave supply `N_down(t − l/w) + storage
//! − N_up(t)`). Vehicles move FIFO per link; nodes merge their sources
//! round-robin with a rotating start so no approach is systematically
//! favoured. All transfers at step `s` happen at time `s·dt`.

use std::collections::{BTreeMap, VecDeque};

use crate::demand::VehicleClass;
use crate::error::{Error, Result};
use crate::flow::fd::{blended_reaction_time, ClassReactionTimes, FdParams};
use crate::flow::result::{LinkCurves, LinkState, LoadingResult, VehicleRecord};
use crate::network::{Clock, LinkIdx, Network, NodeIdx, Path};

const EPS: f64 = 1e-9;

/// Flow of one class on one path departing during one interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathFlow {
    pub path: usize,
    pub interval: usize,
    pub class: VehicleClass,
    pub flow: f64,
}

/// One vehicle to load.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trip {
    pub class: VehicleClass,
    /// Index into the path table passed to the loader.
    pub path: usize,
    pub departure_step: u32,
}

/// Turns fractional path flows into whole vehicles with spread-out departures.
///
/// Per (origin, destination, interval) the vehicle count is the rounded total
/// flow, apportioned over (class, path) entries by largest remainder. The
/// resulting vehicles are interleaved across entries and spaced evenly over
/// the interval.
pub fn discretize(paths: &[Path], flows: &[PathFlow], clock: &Clock) -> Vec<Trip> {
    let mut groups: BTreeMap<(usize, NodeIdx, NodeIdx), Vec<&PathFlow>> = BTreeMap::new();
    for f in flows {
        if f.flow > 0.0 && f.interval < clock.intervals {
            let p = &paths[f.path];
            groups
                .entry((f.interval, p.origin(), p.destination()))
                .or_default()
                .push(f);
        }
    }

    let spi = clock.steps_per_interval() as u64;
    let mut trips = Vec::new();
    for ((interval, _, _), items) in groups {
        let counts = largest_remainder(&items.iter().map(|f| f.flow).collect::<Vec<_>>());
        let mut slots: Vec<(f64, usize)> = Vec::new();
        for (i, &c) in counts.iter().enumerate() {
            for k in 0..c {
                slots.push(((k as f64 + 0.5) / c as f64, i));
            }
        }
        slots.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let n = slots.len() as u64;
        for (j, &(_, i)) in slots.iter().enumerate() {
            let offset = ((2 * j as u64 + 1) * spi) / (2 * n);
            trips.push(Trip {
                class: items[i].class,
                path: items[i].path,
                departure_step: (interval as u64 * spi + offset) as u32,
            });
        }
    }
    trips.sort_by_key(|t| t.departure_step);
    trips
}

/// Integer apportionment of `values` summing to `round(Σ values)`.
pub(crate) fn largest_remainder(values: &[f64]) -> Vec<u64> {
    let total: f64 = values.iter().sum();
    let target = total.round() as u64;
    let mut counts: Vec<u64> = values.iter().map(|v| v.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = values[a] - values[a].floor();
        let rb = values[b] - values[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(target.saturating_sub(assigned) as usize) {
        counts[i] += 1;
    }
    counts
}

/// Discretizes `flows` and loads them.
pub fn load_network(
    network: &Network,
    paths: &[Path],
    flows: &[PathFlow],
    clock: &Clock,
    reaction: &ClassReactionTimes,
) -> Result<LoadingResult> {
    for f in flows {
        if !(f.flow.is_finite() && f.flow >= 0.0) {
            return Err(Error::range("path flow", f.flow, 0.0, f64::INFINITY));
        }
        if f.path >= paths.len() {
            return Err(Error::Structural(format!("path index {} out of range", f.path)));
        }
    }
    let trips = discretize(paths, flows, clock);
    load_trips(network, paths, &trips, clock, reaction)
}

struct LinkSim {
    ff_steps: u32,
    length: f64,
    storage: f64,
    lanes: f64,
    reaction_factor: f64,
    fd: FdParams,
    cap_per_step: f64,
    wave_steps: f64,
    send_acc: f64,
    recv_acc: f64,
    send_budget: u64,
    recv_budget: u64,
    queue: VecDeque<usize>,
    origin_queue: VecDeque<usize>,
    curves: LinkCurves,
}

impl LinkSim {
    fn set_reaction(&mut self, blended: f64, dt: f64) {
        self.fd.reaction_time = blended * self.reaction_factor;
        self.cap_per_step = self.fd.capacity() * self.lanes * dt;
        self.wave_steps = self.length / self.fd.wave_speed() / dt;
    }

    fn open_budgets(&mut self, s: usize) {
        // The bucket holds one vehicle beyond a step's capacity so that the
        // fractional credit left while a vehicle waits is carried, not lost.
        let burst = self.cap_per_step + 1.0;
        let send = (self.send_acc + self.cap_per_step).min(burst);
        let recv = (self.recv_acc + self.cap_per_step).min(burst);
        self.send_acc = send;
        self.recv_acc = recv;
        self.send_budget = (send + EPS).floor() as u64;

        let (up_now, down_now) = match s {
            0 => (0, 0),
            _ => (self.curves.up[s - 1], self.curves.down[s - 1]),
        };
        // N_down at t − l/w, interpolated between committed steps.
        let lookback = s as f64 - self.wave_steps;
        let down_back = if s == 0 || lookback < 0.0 {
            0.0
        } else {
            let lo = lookback.floor() as usize;
            let frac = lookback - lo as f64;
            let at = |i: usize| f64::from(if i >= s { down_now } else { self.curves.down[i] });
            at(lo) + frac * (at(lo + 1) - at(lo))
        };
        let supply = down_back + self.storage - f64::from(up_now);
        let supply = (supply + EPS).floor().max(0.0) as u64;
        self.recv_budget = ((recv + EPS).floor() as u64).min(supply);
    }

    fn close_budgets(&mut self, sent: u64, received: u64) {
        self.send_acc -= sent as f64;
        self.recv_acc -= received as f64;
    }
}

struct VehState {
    trip: Trip,
    entries: Vec<u32>,
}

#[derive(Clone, Copy)]
enum Source {
    Link(LinkIdx),
    Origin(LinkIdx),
}

/// Loads explicit vehicle trips. Fails with [`Error::Gridlock`] when vehicles
/// remain in the network at the horizon end.
pub fn load_trips(
    network: &Network,
    paths: &[Path],
    trips: &[Trip],
    clock: &Clock,
    reaction: &ClassReactionTimes,
) -> Result<LoadingResult> {
    clock.validate()?;
    reaction.validate()?;
    let dt = clock.step_s;
    let spi = clock.steps_per_interval();
    let n_steps = clock.total_steps();
    let n_links = network.links().len();
    let intervals = clock.intervals;

    for t in trips {
        if t.path >= paths.len() {
            return Err(Error::Structural(format!("trip path {} out of range", t.path)));
        }
        if t.departure_step as usize > n_steps {
            return Err(Error::Structural(format!(
                "trip departs at step {} after the horizon ({n_steps} steps)",
                t.departure_step
            )));
        }
    }

    let mut links: Vec<LinkSim> = network
        .links()
        .iter()
        .map(|l| {
            let fd = FdParams::new(
                l.speed_limit,
                l.effective_vehicle_length,
                reaction.hv * l.reaction_time_factor,
            )?;
            let mut sim = LinkSim {
                ff_steps: ((l.free_flow_time() / dt) - EPS).ceil().max(1.0) as u32,
                length: l.length,
                storage: l.jam_storage(),
                lanes: f64::from(l.lanes),
                reaction_factor: l.reaction_time_factor,
                fd,
                cap_per_step: 0.0,
                wave_steps: 0.0,
                send_acc: 0.0,
                recv_acc: 0.0,
                send_budget: 0,
                recv_budget: 0,
                queue: VecDeque::new(),
                origin_queue: VecDeque::new(),
                curves: LinkCurves::default(),
            };
            sim.set_reaction(reaction.hv, dt);
            // start with one full step of credit so the first vehicle is not held
            sim.send_acc = (1.0 - sim.cap_per_step).max(0.0);
            sim.recv_acc = sim.send_acc;
            Ok(sim)
        })
        .collect::<Result<_>>()?;

    let mut order: Vec<usize> = (0..trips.len()).collect();
    order.sort_by_key(|&i| (trips[i].departure_step, i));
    let mut vehicles: Vec<VehState> = order
        .iter()
        .map(|&i| VehState {
            trip: trips[i],
            entries: Vec::with_capacity(paths[trips[i].path].links().len() + 1),
        })
        .collect();

    // per link, per interval: [ue entering, so entering]
    let mut entering = vec![vec![[0u32; 2]; intervals]; n_links];
    let mut occupancy = vec![vec![0u64; intervals]; n_links];
    let mut reaction_used = vec![vec![reaction.hv; intervals]; n_links];
    let mut last_blend = vec![reaction.hv; n_links];

    let node_sources: Vec<Vec<Source>> = (0..network.nodes().len())
        .map(|n| {
            let node = NodeIdx(n);
            network
                .incoming(node)
                .iter()
                .map(|&a| Source::Link(a))
                .chain(network.outgoing(node).iter().map(|&a| Source::Origin(a)))
                .collect()
        })
        .collect();

    let mut next_departure = 0usize;
    let mut exited = 0usize;
    let mut entered = 0usize;
    let mut last_step = 0usize;

    for s in 0..=n_steps {
        last_step = s;
        if s % spi == 0 && s / spi < intervals {
            let tau = s / spi;
            for (a, sim) in links.iter_mut().enumerate() {
                if tau > 0 {
                    let [ue, so] = entering[a][tau - 1];
                    if ue + so > 0 {
                        let f = f64::from(so) / f64::from(ue + so);
                        last_blend[a] = blended_reaction_time(f, reaction)?;
                    }
                }
                sim.set_reaction(last_blend[a], dt);
                reaction_used[a][tau] = sim.fd.reaction_time;
            }
        }

        while next_departure < vehicles.len()
            && vehicles[next_departure].trip.departure_step as usize == s
        {
            let first = paths[vehicles[next_departure].trip.path].links()[0];
            links[first.0].origin_queue.push_back(next_departure);
            links[first.0].curves.origin_arrivals_now += 1;
            next_departure += 1;
        }

        for sim in links.iter_mut() {
            sim.open_budgets(s);
        }
        let mut sent = vec![0u64; n_links];
        let mut received = vec![0u64; n_links];
        let interval = clock.interval_of_step(s);

        for sources in &node_sources {
            if sources.is_empty() {
                continue;
            }
            let start = s % sources.len();
            let mut blocked = vec![false; sources.len()];
            loop {
                let mut moved = false;
                for k in 0..sources.len() {
                    let idx = (start + k) % sources.len();
                    if blocked[idx] {
                        continue;
                    }
                    let ok = match sources[idx] {
                        Source::Link(a) => {
                            let sim = &links[a.0];
                            match sim.queue.front() {
                                Some(&v) if sim.send_budget > 0 => {
                                    let veh = &vehicles[v];
                                    let pos = veh.entries.len() - 1;
                                    let ready = veh.entries[pos] + sim.ff_steps <= s as u32;
                                    let path = paths[veh.trip.path].links();
                                    let next = path.get(pos + 1).copied();
                                    let room = next.is_none_or(|b| links[b.0].recv_budget > 0);
                                    if ready && room {
                                        links[a.0].queue.pop_front();
                                        links[a.0].send_budget -= 1;
                                        sent[a.0] += 1;
                                        links[a.0].curves.down_now += 1;
                                        vehicles[v].entries.push(s as u32);
                                        match next {
                                            Some(b) => {
                                                enter(&mut links[b.0], v, vehicles[v].trip.class, &mut entering[b.0][interval]);
                                                received[b.0] += 1;
                                            }
                                            None => exited += 1,
                                        }
                                        true
                                    } else {
                                        false
                                    }
                                }
                                _ => false,
                            }
                        }
                        Source::Origin(a) => match links[a.0].origin_queue.front() {
                            Some(&v) if links[a.0].recv_budget > 0 => {
                                links[a.0].origin_queue.pop_front();
                                links[a.0].curves.origin_entries_now += 1;
                                vehicles[v].entries.push(s as u32);
                                enter(&mut links[a.0], v, vehicles[v].trip.class, &mut entering[a.0][interval]);
                                received[a.0] += 1;
                                entered += 1;
                                true
                            }
                            _ => false,
                        },
                    };
                    if ok {
                        moved = true;
                    } else {
                        blocked[idx] = true;
                    }
                }
                if !moved {
                    break;
                }
            }
        }

        for (a, sim) in links.iter_mut().enumerate() {
            sim.close_budgets(sent[a], received[a]);
            sim.curves.commit();
            if s < n_steps {
                let on_link = u64::from(sim.curves.up_now - sim.curves.down_now);
                occupancy[a][interval] += on_link;
            }
        }

        if next_departure == vehicles.len() && exited == vehicles.len() {
            break;
        }
    }

    if exited < vehicles.len() {
        let at_origins: usize = links.iter().map(|l| l.origin_queue.len()).sum();
        let on_links: usize = links.iter().map(|l| l.queue.len()).sum();
        return Err(Error::Gridlock {
            stranded: vehicles.len() - exited,
            on_links,
            at_origins: at_origins + (vehicles.len() - next_departure),
        });
    }

    let records: Vec<VehicleRecord> = vehicles
        .into_iter()
        .map(|v| {
            let mut entries = v.entries;
            let exit_step = entries.pop().unwrap();
            VehicleRecord {
                class: v.trip.class,
                path: v.trip.path,
                departure_step: v.trip.departure_step,
                departure_interval: clock.interval_of_step(v.trip.departure_step as usize),
                link_entry_steps: entries,
                exit_step,
            }
        })
        .collect();

    let curves: Vec<LinkCurves> = links
        .iter()
        .map(|l| {
            let mut c = l.curves.clone();
            c.ff_steps = l.ff_steps;
            c.finish();
            c
        })
        .collect();

    let link_states = summarize(
        network,
        paths,
        clock,
        &records,
        &curves,
        &entering,
        &occupancy,
        &reaction_used,
    );

    let tstt_veh_h = records
        .iter()
        .map(|r| f64::from(r.exit_step - r.departure_step) * dt)
        .sum::<f64>()
        / 3600.0;

    Ok(LoadingResult::new(
        *clock,
        link_states,
        records,
        curves,
        paths.to_vec(),
        entered,
        exited,
        tstt_veh_h,
        last_step,
    ))
}

fn enter(sim: &mut LinkSim, v: usize, class: VehicleClass, counts: &mut [u32; 2]) {
    sim.queue.push_back(v);
    sim.recv_budget -= 1;
    sim.curves.up_now += 1;
    match class {
        VehicleClass::Ue => counts[0] += 1,
        VehicleClass::So => counts[1] += 1,
    }
}

#[allow(clippy::too_many_arguments)]
fn summarize(
    network: &Network,
    paths: &[Path],
    clock: &Clock,
    records: &[VehicleRecord],
    curves: &[LinkCurves],
    entering: &[Vec<[u32; 2]>],
    occupancy: &[Vec<u64>],
    reaction_used: &[Vec<f64>],
) -> Vec<Vec<LinkState>> {
    let dt = clock.step_s;
    let spi = clock.steps_per_interval() as u64;
    let intervals = clock.intervals;
    let n_links = network.links().len();

    let mut tt_sum = vec![vec![0.0f64; intervals]; n_links];
    let mut mt_sum = vec![vec![0.0f64; intervals]; n_links];
    let mut tt_n = vec![vec![0u32; intervals]; n_links];
    let mut moved = vec![vec![0.0f64; intervals]; n_links];

    for r in records {
        let links = paths[r.path].links();
        for (i, &a) in links.iter().enumerate() {
            let entry = r.link_entry_steps[i];
            let exit = r.link_entry_steps.get(i + 1).copied().unwrap_or(r.exit_step);
            let tau = clock.interval_of_step(entry as usize);
            let traversal = f64::from(exit - entry) * dt;
            let c = &curves[a.0];
            tt_sum[a.0][tau] += traversal;
            mt_sum[a.0][tau] += traversal + c.queue_clearance_steps(exit) as f64 * dt;
            tt_n[a.0][tau] += 1;

            // free-flow movement occupies [entry, entry + ff); queueing covers no distance
            let ff = u64::from(c.ff_steps);
            let (mut lo, hi) = (u64::from(entry), u64::from(entry) + ff);
            while lo < hi {
                let tau = (lo / spi) as usize;
                let end = ((tau as u64 + 1) * spi).min(hi);
                let share = (end - lo) as f64 / ff as f64;
                if tau < intervals {
                    moved[a.0][tau] += share;
                }
                lo = end;
            }
        }
    }

    let interval_h = clock.interval_s / 3600.0;
    network
        .links()
        .iter()
        .enumerate()
        .map(|(a, link)| {
            let ff_time = link.free_flow_time();
            (0..intervals)
                .map(|tau| {
                    let n = tt_n[a][tau];
                    let (travel_time, marginal_time) = if n > 0 {
                        (tt_sum[a][tau] / f64::from(n), mt_sum[a][tau] / f64::from(n))
                    } else {
                        let c = &curves[a];
                        let probe = (clock.interval_mid(tau) + ff_time) / dt;
                        let x = probe.ceil() as u32;
                        (ff_time, ff_time + c.queue_clearance_steps(x) as f64 * dt)
                    };
                    let [ue, so] = entering[a][tau];
                    LinkState {
                        density: occupancy[a][tau] as f64 * dt
                            / clock.interval_s
                            / link.lane_km(),
                        flow: moved[a][tau] / f64::from(link.lanes) / interval_h,
                        travel_time,
                        marginal_time,
                        free_flow_time: ff_time,
                        entering: ue + so,
                        entering_so: so,
                        reaction_time: reaction_used[a][tau],
                    }
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn largest_remainder_hits_rounded_total() {
        assert_eq!(largest_remainder(&[0.7, 0.3]), vec![1, 0]);
        assert_eq!(largest_remainder(&[1.5, 1.5, 1.0]), vec![2, 1, 1]);
        assert_eq!(largest_remainder(&[2.4, 2.4, 2.2]), vec![3, 2, 2]);
        assert_eq!(largest_remainder(&[]), Vec::<u64>::new());
        let c = largest_remainder(&[33.3, 33.3, 33.4]);
        assert_eq!(c.iter().sum::<u64>(), 100);
    }
}
