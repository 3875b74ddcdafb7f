use crate::demand::VehicleClass;
use crate::error::{Error, Result};
use crate::network::{Clock, LinkIdx, Network, Path};

/// Interval skim of one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkState {
    /// Time-mean density, veh/km/lane.
    pub density: f64,
    /// Space-time (Edie) flow, veh/h/lane.
    pub flow: f64,
    /// Mean traversal time of vehicles entering during the interval, s.
    /// Free-flow time when nobody entered.
    pub travel_time: f64,
    /// Mean traversal time plus queue-clearance externality, s.
    pub marginal_time: f64,
    /// `l / V`, s.
    pub free_flow_time: f64,
    pub entering: u32,
    pub entering_so: u32,
    /// Reaction time applied during the interval (blended, times link factor), s.
    pub reaction_time: f64,
}

impl LinkState {
    pub fn cav_fraction(&self) -> Option<f64> {
        (self.entering > 0).then(|| f64::from(self.entering_so) / f64::from(self.entering))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VehicleRecord {
    pub class: VehicleClass,
    pub path: usize,
    pub departure_step: u32,
    pub departure_interval: usize,
    /// Step at which the vehicle entered each link of its path.
    pub link_entry_steps: Vec<u32>,
    pub exit_step: u32,
}

impl VehicleRecord {
    /// `(entry, exit)` steps on the `i`-th link of the path.
    pub fn link_span(&self, i: usize) -> (u32, u32) {
        let exit = self
            .link_entry_steps
            .get(i + 1)
            .copied()
            .unwrap_or(self.exit_step);
        (self.link_entry_steps[i], exit)
    }
}

/// Cumulative vehicle counts of one link, indexed by step (value after the
/// transfers of that step).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinkCurves {
    pub ff_steps: u32,
    pub up: Vec<u32>,
    pub down: Vec<u32>,
    /// Vehicles that have departed onto this link from its tail node.
    pub origin_arrivals: Vec<u32>,
    /// Of those, vehicles that have entered the link.
    pub origin_entries: Vec<u32>,
    pub(crate) up_now: u32,
    pub(crate) down_now: u32,
    pub(crate) origin_arrivals_now: u32,
    pub(crate) origin_entries_now: u32,
    clear_at: Vec<u32>,
    origin_clear_at: Vec<u32>,
}

fn at(v: &[u32], i: usize) -> u32 {
    match v.get(i) {
        Some(&x) => x,
        None => v.last().copied().unwrap_or(0),
    }
}

/// First index `>= from` where `pred` holds, or `len` if none.
fn first_from(len: usize, from: usize, pred: impl Fn(usize) -> bool) -> usize {
    (from..len).find(|&i| pred(i)).unwrap_or(len)
}

impl LinkCurves {
    pub(crate) fn commit(&mut self) {
        self.up.push(self.up_now);
        self.down.push(self.down_now);
        self.origin_arrivals.push(self.origin_arrivals_now);
        self.origin_entries.push(self.origin_entries_now);
    }

    pub(crate) fn finish(&mut self) {
        let n = self.up.len();
        self.clear_at = vec![0; n];
        self.origin_clear_at = vec![0; n];
        let mut next = n as u32;
        let mut next_o = n as u32;
        for y in (0..n).rev() {
            if self.ready(y) == 0 {
                next = y as u32;
            }
            self.clear_at[y] = next;
            if self.origin_backlog(y) == 0 {
                next_o = y as u32;
            }
            self.origin_clear_at[y] = next_o;
        }
    }

    pub fn up_at(&self, step: usize) -> u32 {
        at(&self.up, step)
    }

    pub fn down_at(&self, step: usize) -> u32 {
        at(&self.down, step)
    }

    /// Vehicles that finished free-flow traversal by `step` but have not left.
    pub fn ready(&self, step: usize) -> u32 {
        let arrived = match step.checked_sub(self.ff_steps as usize) {
            Some(s) => self.up_at(s),
            None => 0,
        };
        arrived.saturating_sub(self.down_at(step))
    }

    pub fn origin_backlog(&self, step: usize) -> u32 {
        at(&self.origin_arrivals, step).saturating_sub(at(&self.origin_entries, step))
    }

    /// Steps from `step` until the exit queue has fully discharged.
    pub fn queue_clearance_steps(&self, step: u32) -> u32 {
        let s = step as usize;
        if s >= self.clear_at.len() {
            return 0;
        }
        self.clear_at[s] - step
    }

    pub fn origin_clearance_steps(&self, step: u32) -> u32 {
        let s = step as usize;
        if s >= self.origin_clear_at.len() {
            return 0;
        }
        self.origin_clear_at[s] - step
    }

    /// Exit step of an extra vehicle entering at `entry`: after everyone
    /// already on the link, and no earlier than free flow allows.
    pub fn probe_exit(&self, entry: u32) -> u32 {
        let ahead = self.up_at(entry as usize);
        let n = self.down.len();
        let drained = if self.down_at(n) >= ahead {
            first_from(n, entry as usize, |y| self.down[y] >= ahead) as u32
        } else {
            n as u32
        };
        drained.max(entry + self.ff_steps)
    }

    /// Entry step of an extra vehicle departing onto the link at `depart`.
    pub fn probe_origin_entry(&self, depart: u32) -> u32 {
        let ahead = at(&self.origin_arrivals, depart as usize);
        let n = self.origin_entries.len();
        first_from(n, depart as usize, |y| self.origin_entries[y] >= ahead).max(depart as usize)
            as u32
    }
}

/// Marginal-cost probe of a single link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkProbe {
    pub entry_time: f64,
    pub exit_time: f64,
    /// Additional time until the exit queue present at `exit_time` clears, s.
    pub externality: f64,
}

impl LinkProbe {
    pub fn travel_time(&self) -> f64 {
        self.exit_time - self.entry_time
    }

    pub fn marginal_time(&self) -> f64 {
        self.travel_time() + self.externality
    }
}

/// Everything a loading run produces.
#[derive(Debug, Clone)]
pub struct LoadingResult {
    clock: Clock,
    link_states: Vec<Vec<LinkState>>,
    vehicles: Vec<VehicleRecord>,
    curves: Vec<LinkCurves>,
    paths: Vec<Path>,
    entered: usize,
    exited: usize,
    tstt_veh_h: f64,
    last_step: usize,
}

impl LoadingResult {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        clock: Clock,
        link_states: Vec<Vec<LinkState>>,
        vehicles: Vec<VehicleRecord>,
        curves: Vec<LinkCurves>,
        paths: Vec<Path>,
        entered: usize,
        exited: usize,
        tstt_veh_h: f64,
        last_step: usize,
    ) -> Self {
        LoadingResult {
            clock,
            link_states,
            vehicles,
            curves,
            paths,
            entered,
            exited,
            tstt_veh_h,
            last_step,
        }
    }

    pub fn clock(&self) -> &Clock {
        &self.clock
    }

    pub fn link_state(&self, link: LinkIdx, interval: usize) -> &LinkState {
        &self.link_states[link.0][interval]
    }

    pub fn link_states(&self, link: LinkIdx) -> &[LinkState] {
        &self.link_states[link.0]
    }

    /// States of every link during `interval`, indexed by link.
    pub fn interval_states(&self, interval: usize) -> Vec<LinkState> {
        self.link_states.iter().map(|s| s[interval]).collect()
    }

    pub fn vehicles(&self) -> &[VehicleRecord] {
        &self.vehicles
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn link_count(&self) -> usize {
        self.curves.len()
    }

    pub fn curves(&self, link: LinkIdx) -> &LinkCurves {
        &self.curves[link.0]
    }

    pub fn entered(&self) -> usize {
        self.entered
    }

    pub fn exited(&self) -> usize {
        self.exited
    }

    /// Total system travel time, vehicle-hours (departure to exit, origin
    /// waiting included).
    pub fn tstt_veh_h(&self) -> f64 {
        self.tstt_veh_h
    }

    /// Last simulated step; the loader stops early once the network is empty.
    pub fn last_step(&self) -> usize {
        self.last_step
    }

    fn step_of(&self, t: f64) -> u32 {
        ((t / self.clock.step_s) - 1e-9).ceil().max(0.0) as u32
    }

    /// Probes link `link` with one extra vehicle entering at `entry_time`.
    pub fn probe_link(&self, link: LinkIdx, entry_time: f64) -> LinkProbe {
        let dt = self.clock.step_s;
        let c = &self.curves[link.0];
        let e = self.step_of(entry_time);
        let x = c.probe_exit(e);
        LinkProbe {
            entry_time,
            exit_time: f64::from(x) * dt,
            externality: f64::from(c.queue_clearance_steps(x)) * dt,
        }
    }

    /// Local marginal time of `link` for a vehicle entering at `entry_time`:
    /// its own traversal plus the time the queue it leaves behind still needs
    /// to clear.
    pub fn link_marginal_time(&self, link: LinkIdx, entry_time: f64) -> f64 {
        self.probe_link(link, entry_time).marginal_time()
    }

    /// `(wait, externality)` at the origin for a vehicle departing at
    /// `depart_time` onto `first_link`.
    pub fn probe_origin(&self, first_link: LinkIdx, depart_time: f64) -> (f64, f64) {
        let dt = self.clock.step_s;
        let c = &self.curves[first_link.0];
        let d = self.step_of(depart_time);
        let y = c.probe_origin_entry(d);
        let wait = f64::from(y) * dt - depart_time;
        (wait.max(0.0), f64::from(c.origin_clearance_steps(y)) * dt)
    }

    /// Experienced time of an extra vehicle on `path` departing at `depart_time`.
    pub fn path_probe_time(&self, path: &Path, depart_time: f64) -> f64 {
        self.walk(path, depart_time, false)
    }

    /// Sum of local link marginal times along `path` for a departure at
    /// `depart_time`, including the origin queue.
    pub fn path_marginal_time(&self, path: &Path, depart_time: f64) -> f64 {
        self.walk(path, depart_time, true)
    }

    fn walk(&self, path: &Path, depart_time: f64, marginal: bool) -> f64 {
        let links = path.links();
        let (wait, ext) = self.probe_origin(links[0], depart_time);
        let mut t = depart_time + wait;
        let mut total = wait + if marginal { ext } else { 0.0 };
        for &a in links {
            let p = self.probe_link(a, t);
            total += if marginal {
                p.marginal_time()
            } else {
                p.travel_time()
            };
            t = p.exit_time;
        }
        total
    }

    /// Mean `(wait, wait + externality)` at the origin for vehicles departing
    /// during `interval` onto `first_link`; probed at the interval midpoint
    /// when nobody departed.
    pub fn origin_delay(&self, first_link: LinkIdx, interval: usize) -> (f64, f64) {
        let dt = self.clock.step_s;
        let c = &self.curves[first_link.0];
        let (mut n, mut wait, mut marg) = (0u32, 0.0, 0.0);
        for v in &self.vehicles {
            if v.departure_interval == interval && self.paths[v.path].links()[0] == first_link {
                let entry = v.link_entry_steps[0];
                let w = f64::from(entry - v.departure_step) * dt;
                n += 1;
                wait += w;
                marg += w + f64::from(c.origin_clearance_steps(entry)) * dt;
            }
        }
        if n > 0 {
            (wait / f64::from(n), marg / f64::from(n))
        } else {
            let (w, e) = self.probe_origin(first_link, self.clock.interval_mid(interval));
            (w, w + e)
        }
    }

    /// Mean experienced trip time of `class` vehicles on path index `path`
    /// departing in `interval`, if any.
    pub fn experienced_path_time(
        &self,
        path: usize,
        interval: usize,
        class: VehicleClass,
    ) -> Option<f64> {
        let dt = self.clock.step_s;
        let (n, sum) = self
            .vehicles
            .iter()
            .filter(|v| v.path == path && v.departure_interval == interval && v.class == class)
            .fold((0u32, 0.0), |(n, s), v| {
                (n + 1, s + f64::from(v.exit_step - v.departure_step) * dt)
            });
        (n > 0).then(|| sum / f64::from(n))
    }

    /// Per-interval travel-time skim of `link` (convenience for reports).
    pub fn travel_time(&self, link: LinkIdx, interval: usize) -> f64 {
        self.link_states[link.0][interval].travel_time
    }

    /// Checks that every loaded vehicle left the network.
    pub fn ensure_complete(&self) -> Result<()> {
        if self.exited != self.vehicles.len() {
            return Err(Error::Gridlock {
                stranded: self.vehicles.len() - self.exited,
                on_links: 0,
                at_origins: 0,
            });
        }
        Ok(())
    }

    /// Zone links traversed by a vehicle: `(link, entry_step, exit_step)`.
    pub fn zone_spans<'a>(
        &'a self,
        network: &'a Network,
        v: &'a VehicleRecord,
    ) -> impl Iterator<Item = (LinkIdx, u32, u32)> + 'a {
        self.paths[v.path]
            .links()
            .iter()
            .enumerate()
            .filter(|(_, &a)| network.link(a).in_pricing_zone)
            .map(move |(i, &a)| {
                let (e, x) = v.link_span(i);
                (a, e, x)
            })
    }
}
