//! Geospatial preprocessing: POI clustering, shortest routes within a
//! cluster and compass summaries relative to the hotel.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{GeoPoint, Poi};

pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Brute force is used below this many intermediate stops.
pub const BRUTE_FORCE_LIMIT: usize = 6;

pub const MAX_LLOYD_ITERATIONS: usize = 100;

/// Compass points, clockwise from north.
pub const COMPASS: [Compass; 8] = [
    Compass::N,
    Compass::NE,
    Compass::E,
    Compass::SE,
    Compass::S,
    Compass::SW,
    Compass::W,
    Compass::NW,
];

#[derive(Debug, Error, PartialEq)]
pub enum SpatialError {
    #[error("cluster count {k} outside 1..={n}")]
    ClusterCount { k: usize, n: usize },
    #[error("unknown location `{0}`")]
    UnknownLocation(String),
    #[error("duplicate location name `{0}`")]
    DuplicateLocation(String),
    #[error("path must run from `{start}` to `{end}`")]
    Endpoints { start: String, end: String },
}

/// Great-circle distance in kilometres.
pub fn haversine(a: GeoPoint, b: GeoPoint) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let d_phi = (b.lat - a.lat).to_radians();
    let d_lambda = (b.lon - a.lon).to_radians();
    let h = (d_phi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (d_lambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedPoint {
    pub name: String,
    pub location: GeoPoint,
}

impl NamedPoint {
    pub fn new(name: impl Into<String>, location: GeoPoint) -> Self {
        Self {
            name: name.into(),
            location,
        }
    }
}

impl From<&Poi> for NamedPoint {
    fn from(poi: &Poi) -> Self {
        Self::new(poi.name.clone(), poi.location)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: usize,
    pub members: Vec<String>,
    pub centroid: GeoPoint,
}

/// Raw k-means output over bare points.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansOutcome {
    pub assignment: Vec<usize>,
    pub centroids: Vec<GeoPoint>,
    /// Within-cluster sum of squared haversine distances after each Lloyd update.
    pub wcss_history: Vec<f64>,
    pub iterations: usize,
}

fn dist2(a: GeoPoint, b: GeoPoint) -> f64 {
    haversine(a, b).powi(2)
}

fn mean_point(points: impl IntoIterator<Item = GeoPoint>) -> Option<GeoPoint> {
    let (mut lat, mut lon, mut n) = (0.0, 0.0, 0usize);
    for p in points {
        lat += p.lat;
        lon += p.lon;
        n += 1;
    }
    (n > 0).then(|| GeoPoint {
        lat: lat / n as f64,
        lon: lon / n as f64,
    })
}

pub fn wcss(points: &[GeoPoint], assignment: &[usize], centroids: &[GeoPoint]) -> f64 {
    points
        .iter()
        .zip(assignment)
        .map(|(p, &c)| dist2(*p, centroids[c]))
        .sum()
}

fn seed_centroids(points: &[GeoPoint], k: usize, rng: &mut ChaCha8Rng) -> Vec<GeoPoint> {
    let n = points.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut nearest: Vec<f64> = points
        .iter()
        .map(|p| dist2(*p, points[chosen[0]]))
        .collect();
    while chosen.len() < k {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, w) in nearest.iter().enumerate() {
                if *w <= 0.0 {
                    continue;
                }
                acc += w;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick.expect("positive total weight has a positive entry")
        } else {
            // every remaining point coincides with a chosen centre
            (0..n).find(|i| !chosen.contains(i)).expect("k <= n")
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            nearest[i] = nearest[i].min(dist2(*p, points[next]));
        }
    }
    chosen.into_iter().map(|i| points[i]).collect()
}

fn assign(points: &[GeoPoint], centroids: &[GeoPoint]) -> Vec<usize> {
    points
        .iter()
        .map(|p| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let d = dist2(*p, *centroid);
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            best
        })
        .collect()
}

/// Moves the worst-fitting point of a multi-member cluster into each empty cluster.
fn fill_empty_clusters(points: &[GeoPoint], assignment: &mut [usize], centroids: &mut [GeoPoint]) {
    let k = centroids.len();
    loop {
        let mut sizes = vec![0usize; k];
        for &c in assignment.iter() {
            sizes[c] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let donor = (0..points.len())
            .filter(|&i| sizes[assignment[i]] > 1)
            .max_by(|&a, &b| {
                let da = dist2(points[a], centroids[assignment[a]]);
                let db = dist2(points[b], centroids[assignment[b]]);
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("k <= n guarantees a cluster with spare members");
        assignment[donor] = empty;
        centroids[empty] = points[donor];
    }
}

/// k-means++ seeding followed by Lloyd iterations until the assignment
/// stops changing or [`MAX_LLOYD_ITERATIONS`] is reached.
pub fn kmeans(points: &[GeoPoint], k: usize, seed: u64) -> Result<KMeansOutcome, SpatialError> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(SpatialError::ClusterCount { k, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(points, k, &mut rng);
    let mut assignment: Vec<usize> = Vec::new();
    let mut wcss_history = Vec::new();
    let mut iterations = 0;
    while iterations < MAX_LLOYD_ITERATIONS {
        let mut next = assign(points, &centroids);
        fill_empty_clusters(points, &mut next, &mut centroids);
        if next == assignment {
            break;
        }
        assignment = next;
        iterations += 1;
        for (c, centroid) in centroids.iter_mut().enumerate() {
            let members = points
                .iter()
                .zip(&assignment)
                .filter(|(_, &a)| a == c)
                .map(|(p, _)| *p);
            if let Some(m) = mean_point(members) {
                *centroid = m;
            }
        }
        wcss_history.push(wcss(points, &assignment, &centroids));
    }
    Ok(KMeansOutcome {
        assignment,
        centroids,
        wcss_history,
        iterations,
    })
}

/// Clusters POIs with k-means++ under squared haversine distance.
pub fn cluster_pois(pois: &[Poi], k: usize, seed: u64) -> Result<Vec<Cluster>, SpatialError> {
    let points: Vec<GeoPoint> = pois.iter().map(|p| p.location).collect();
    let outcome = kmeans(&points, k, seed)?;
    Ok((0..k)
        .map(|c| {
            let members: Vec<&Poi> = pois
                .iter()
                .zip(&outcome.assignment)
                .filter(|(_, &a)| a == c)
                .map(|(p, _)| p)
                .collect();
            Cluster {
                id: c,
                centroid: mean_point(members.iter().map(|p| p.location))
                    .expect("clusters are non-empty"),
                members: members.iter().map(|p| p.id.clone()).collect(),
            }
        })
        .collect())
}

/// Number of clusters: one per travel day, never more than there are POIs.
pub fn choose_k(num_days: usize, num_pois: usize) -> usize {
    num_days.clamp(1, num_pois.max(1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteResult {
    pub path: Vec<String>,
    pub total_distance: f64,
    pub step_distances: Vec<f64>,
}

struct RouteProblem {
    names: Vec<String>,
    coords: Vec<GeoPoint>,
}

impl RouteProblem {
    fn new(locations: &[NamedPoint]) -> Result<Self, SpatialError> {
        let mut seen = BTreeSet::new();
        for l in locations {
            if !seen.insert(l.name.as_str()) {
                return Err(SpatialError::DuplicateLocation(l.name.clone()));
            }
        }
        Ok(Self {
            names: locations.iter().map(|l| l.name.clone()).collect(),
            coords: locations.iter().map(|l| l.location).collect(),
        })
    }

    fn index(&self, name: &str) -> Result<usize, SpatialError> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| SpatialError::UnknownLocation(name.to_string()))
    }

    fn d(&self, a: usize, b: usize) -> f64 {
        haversine(self.coords[a], self.coords[b])
    }

    fn length(&self, path: &[usize]) -> f64 {
        path.windows(2).map(|w| self.d(w[0], w[1])).sum()
    }

    fn result(&self, path: &[usize]) -> RouteResult {
        let step_distances: Vec<f64> = path.windows(2).map(|w| self.d(w[0], w[1])).collect();
        RouteResult {
            path: path.iter().map(|&i| self.names[i].clone()).collect(),
            total_distance: step_distances.iter().sum(),
            step_distances,
        }
    }
}

/// Rearranges `v` into the next lexicographic permutation; false when `v` was the last one.
fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = v.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = v
        .iter()
        .rposition(|&x| x > v[i])
        .expect("a larger element exists right of the pivot");
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

fn brute_force(problem: &RouteProblem, start: usize, end: usize, others: &[usize]) -> Vec<usize> {
    let mut order = others.to_vec();
    order.sort_unstable();
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        let path: Vec<usize> = std::iter::once(start)
            .chain(order.iter().copied())
            .chain(std::iter::once(end))
            .collect();
        let len = problem.length(&path);
        if best.as_ref().is_none_or(|(b, _)| len < *b) {
            best = Some((len, path));
        }
        if !next_permutation(&mut order) {
            break;
        }
    }
    best.expect("at least one permutation").1
}

fn nearest_neighbor_indices(
    problem: &RouteProblem,
    start: usize,
    end: usize,
    others: &[usize],
) -> Vec<usize> {
    let mut remaining: Vec<usize> = others.to_vec();
    let mut path = vec![start];
    while !remaining.is_empty() {
        let here = *path.last().expect("path starts non-empty");
        let (pos, _) = remaining
            .iter()
            .enumerate()
            .min_by(|(_, &a), (_, &b)| problem.d(here, a).total_cmp(&problem.d(here, b)))
            .expect("remaining is non-empty");
        path.push(remaining.remove(pos));
    }
    path.push(end);
    path
}

fn two_opt_indices(problem: &RouteProblem, mut path: Vec<usize>) -> Vec<usize> {
    const EPS: f64 = 1e-12;
    let n = path.len();
    if n < 4 {
        return path;
    }
    'scan: loop {
        // reverse path[i..=j]; both ends of the path stay put
        for i in 1..n - 2 {
            for j in i + 1..n - 1 {
                let (a, b, c, d) = (path[i - 1], path[i], path[j], path[j + 1]);
                let delta = problem.d(a, c) + problem.d(b, d) - problem.d(a, b) - problem.d(c, d);
                if delta < -EPS {
                    path[i..=j].reverse();
                    continue 'scan;
                }
            }
        }
        return path;
    }
}

fn split_endpoints(
    problem: &RouteProblem,
    start: &str,
    end: &str,
) -> Result<(usize, usize, Vec<usize>), SpatialError> {
    let s = problem.index(start)?;
    let e = problem.index(end)?;
    let others = (0..problem.names.len())
        .filter(|&i| i != s && i != e)
        .collect();
    Ok((s, e, others))
}

/// Shortest path from `start` through every other location to `end`.
///
/// Exact by enumeration for fewer than [`BRUTE_FORCE_LIMIT`] intermediate
/// stops, otherwise nearest-neighbour construction refined by 2-opt.
pub fn find_shortest_route(
    locations: &[NamedPoint],
    start: &str,
    end: &str,
) -> Result<RouteResult, SpatialError> {
    let problem = RouteProblem::new(locations)?;
    let (s, e, others) = split_endpoints(&problem, start, end)?;
    let path = if others.len() < BRUTE_FORCE_LIMIT {
        brute_force(&problem, s, e, &others)
    } else {
        two_opt_indices(&problem, nearest_neighbor_indices(&problem, s, e, &others))
    };
    Ok(problem.result(&path))
}

/// Greedy nearest-neighbour path with fixed endpoints.
pub fn nearest_neighbor_route(
    locations: &[NamedPoint],
    start: &str,
    end: &str,
) -> Result<RouteResult, SpatialError> {
    let problem = RouteProblem::new(locations)?;
    let (s, e, others) = split_endpoints(&problem, start, end)?;
    Ok(problem.result(&nearest_neighbor_indices(&problem, s, e, &others)))
}

/// Applies first-improvement 2-opt moves on interior positions until none
/// shortens the path.
pub fn two_opt_improve(
    path: &[String],
    coords: &BTreeMap<String, GeoPoint>,
    start: &str,
    end: &str,
) -> Result<Vec<String>, SpatialError> {
    if path.first().map(String::as_str) != Some(start)
        || path.last().map(String::as_str) != Some(end)
    {
        return Err(SpatialError::Endpoints {
            start: start.into(),
            end: end.into(),
        });
    }
    let lookup = |name: &String| {
        coords
            .get(name)
            .copied()
            .ok_or_else(|| SpatialError::UnknownLocation(name.clone()))
    };
    let problem = RouteProblem {
        names: path.to_vec(),
        coords: path.iter().map(lookup).collect::<Result<_, _>>()?,
    };
    let improved = two_opt_indices(&problem, (0..path.len()).collect());
    Ok(improved.into_iter().map(|i| path[i].clone()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Compass {
    N,
    NE,
    E,
    SE,
    S,
    SW,
    W,
    NW,
}

impl Compass {
    pub fn from_bearing(bearing_deg: f64) -> Compass {
        COMPASS[((bearing_deg / 45.0).round() as usize) % 8]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::N => "N",
            Self::NE => "NE",
            Self::E => "E",
            Self::SE => "SE",
            Self::S => "S",
            Self::SW => "SW",
            Self::W => "W",
            Self::NW => "NW",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BearingResult {
    pub target: String,
    pub direction: Compass,
    pub distance_km: f64,
    pub bearing_deg: f64,
}

/// Initial bearing from `from` to `to` in degrees, `[0, 360)`, north = 0.
pub fn initial_bearing(from: GeoPoint, to: GeoPoint) -> f64 {
    let (phi_s, phi_t) = (from.lat.to_radians(), to.lat.to_radians());
    let d_lambda = (to.lon - from.lon).to_radians();
    let y = d_lambda.sin() * phi_t.cos();
    let x = phi_s.cos() * phi_t.sin() - phi_s.sin() * phi_t.cos() * d_lambda.cos();
    let theta = (y.atan2(x).to_degrees() + 360.0) % 360.0;
    // -0.0 and rounding can land exactly on 360
    if theta >= 360.0 {
        0.0
    } else {
        theta
    }
}

/// Direction and distance from `start` to every target.
pub fn directions_distances(start: GeoPoint, targets: &[NamedPoint]) -> Vec<BearingResult> {
    targets
        .iter()
        .map(|t| {
            let distance_km = haversine(start, t.location);
            let bearing_deg = if distance_km == 0.0 {
                0.0
            } else {
                initial_bearing(start, t.location)
            };
            BearingResult {
                target: t.name.clone(),
                direction: Compass::from_bearing(bearing_deg),
                distance_km,
                bearing_deg,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRoute {
    pub cluster: usize,
    pub route: RouteResult,
}

/// Everything the planning context needs from the map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub days: usize,
    pub seed: u64,
    pub k: usize,
    /// `k` was lowered because there are fewer sightseeing POIs than days.
    pub clamped: bool,
    pub hotel: String,
    pub clusters: Vec<Cluster>,
    /// Hotel-to-hotel loop through each cluster.
    pub routes: Vec<ClusterRoute>,
    /// Compass direction and distance from the hotel to each cluster centre.
    pub bearings: Vec<BearingResult>,
}

pub fn cluster_label(id: usize) -> String {
    format!("Cluster {id}")
}

/// Clusters the sightseeing POIs into one group per day, then routes each
/// cluster from and back to the hotel and locates it relative to the hotel.
pub fn preprocess(
    pois: &[Poi],
    hotel: &Poi,
    days: usize,
    seed: u64,
) -> Result<PreprocessReport, SpatialError> {
    let candidates: Vec<Poi> = pois
        .iter()
        .filter(|p| p.category.is_sightseeable() && p.id != hotel.id)
        .cloned()
        .collect();
    if candidates.is_empty() {
        return Err(SpatialError::ClusterCount { k: days, n: 0 });
    }
    let k = choose_k(days, candidates.len());
    let clusters = cluster_pois(&candidates, k, seed)?;
    let mut routes = Vec::with_capacity(clusters.len());
    for cluster in &clusters {
        let mut locations = vec![NamedPoint::from(hotel)];
        locations.extend(
            cluster
                .members
                .iter()
                .filter_map(|id| candidates.iter().find(|p| &p.id == id))
                .map(NamedPoint::from),
        );
        let route = find_shortest_route(&locations, &hotel.name, &hotel.name)?;
        routes.push(ClusterRoute {
            cluster: cluster.id,
            route,
        });
    }
    let targets: Vec<NamedPoint> = clusters
        .iter()
        .map(|c| NamedPoint::new(cluster_label(c.id), c.centroid))
        .collect();
    Ok(PreprocessReport {
        days,
        seed,
        k,
        clamped: k < days,
        hotel: hotel.name.clone(),
        bearings: directions_distances(hotel.location, &targets),
        clusters,
        routes,
    })
}
