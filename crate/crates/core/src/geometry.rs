//! Planar link topologies.
//!
//! Links live in the 2D Euclidean plane. Everything downstream only reads
//! distances through [`distance`] and [`link_distance`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Euclidean distance between two points.
#[inline]
pub fn distance<T: Scalar>(a: Point<T>, b: Point<T>) -> T {
    (a.x - b.x).hypot(a.y - b.y)
}

/// A sender/receiver pair. `id` is the link's index in its [`Topology`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link<T> {
    pub id: usize,
    pub sender: Point<T>,
    pub receiver: Point<T>,
}

impl<T: Scalar> Link<T> {
    pub fn new(id: usize, sender: Point<T>, receiver: Point<T>) -> Self {
        Self {
            id,
            sender,
            receiver,
        }
    }

    #[inline]
    pub fn length(&self) -> T {
        distance(self.sender, self.receiver)
    }
}

/// Distance from `v`'s sender to `u`'s receiver (`d_vu`).
#[inline]
pub fn link_distance<T: Scalar>(v: &Link<T>, u: &Link<T>) -> T {
    distance(v.sender, u.receiver)
}

/// A set of links plus the radio constants they share.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TopologyDoc<T>", into = "TopologyDoc<T>")]
#[serde(bound = "T: Scalar")]
pub struct Topology<T> {
    links: Vec<Link<T>>,
    alpha: T,
    beta: T,
    noise: T,
    lengths: Vec<T>,
    length_range: Option<(T, T)>,
}

impl<T: Scalar> Topology<T> {
    /// Builds a topology, renumbering link ids to their list position.
    pub fn new(links: Vec<Link<T>>, alpha: T, beta: T, noise: T) -> Result<Self> {
        if !(alpha > T::zero() && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        if !(beta > T::zero() && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive, got {beta}"
            )));
        }
        if !(noise >= T::zero() && noise.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise must be non-negative, got {noise}"
            )));
        }
        let mut links = links;
        for (i, link) in links.iter_mut().enumerate() {
            link.id = i;
            if !link.sender.is_finite() || !link.receiver.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "link {i} has a non-finite coordinate"
                )));
            }
            if link.length().is_nan() || link.length() <= T::zero() {
                return Err(Error::InvalidParameter(format!(
                    "link {i} has zero length"
                )));
            }
        }
        let lengths: Vec<T> = links.iter().map(Link::length).collect();
        let length_range = lengths.iter().fold(None, |acc: Option<(T, T)>, &l| {
            Some(match acc {
                None => (l, l),
                Some((lo, hi)) => (lo.min(l), hi.max(l)),
            })
        });
        Ok(Self {
            links,
            alpha,
            beta,
            noise,
            lengths,
            length_range,
        })
    }

    pub fn links(&self) -> &[Link<T>] {
        &self.links
    }

    pub fn link(&self, id: usize) -> &Link<T> {
        &self.links[id]
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn noise(&self) -> T {
        self.noise
    }

    /// Cached link length `ℓ_u`.
    #[inline]
    pub fn length(&self, id: usize) -> T {
        self.lengths[id]
    }

    pub fn lengths(&self) -> &[T] {
        &self.lengths
    }

    /// `(ℓ_min, ℓ_max)`, or `None` for an empty topology.
    pub fn length_range(&self) -> Option<(T, T)> {
        self.length_range
    }

    /// `d_vu`: distance from the sender of `v` to the receiver of `u`.
    #[inline]
    pub fn link_distance(&self, v: usize, u: usize) -> T {
        link_distance(&self.links[v], &self.links[u])
    }
}

/// Length diversity `Δ = ℓ_max / ℓ_min`.
pub fn length_diversity<T: Scalar>(topology: &Topology<T>) -> Result<T> {
    let (lo, hi) = topology.length_range().ok_or(Error::EmptyTopology)?;
    Ok(hi / lo)
}

/// Parameters for [`generate_random_topology`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopologyParams<T> {
    pub n: usize,
    pub side: T,
    pub lmin: T,
    pub lmax: T,
    pub alpha: T,
    pub beta: T,
    pub noise: T,
}

impl<T: Scalar> TopologyParams<T> {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        if !(self.side > T::zero() && self.side.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "side must be positive, got {}",
                self.side
            )));
        }
        if !(self.lmin > T::zero() && self.lmin <= self.lmax && self.lmax.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < lmin <= lmax, got lmin={} lmax={}",
                self.lmin, self.lmax
            )));
        }
        Ok(())
    }
}

/// Random links in a `side × side` square.
///
/// Senders are uniform in the square, lengths uniform in `[lmin, lmax]`, and
/// each receiver sits at that length in a uniformly random direction (it may
/// fall outside the square).
pub fn generate_random_topology<T: Scalar>(
    params: &TopologyParams<T>,
    seed: u64,
) -> Result<Topology<T>> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = params.side.as_f64();
    let (lmin, lmax) = (params.lmin.as_f64(), params.lmax.as_f64());
    let links = (0..params.n)
        .map(|id| {
            let sx = rng.random::<f64>() * side;
            let sy = rng.random::<f64>() * side;
            let len = lmin + rng.random::<f64>() * (lmax - lmin);
            let theta = rng.random::<f64>() * std::f64::consts::TAU;
            let sender = Point::new(T::lit(sx), T::lit(sy));
            let receiver = Point::new(T::lit(sx + len * theta.cos()), T::lit(sy + len * theta.sin()));
            Link::new(id, sender, receiver)
        })
        .collect();
    Topology::new(links, params.alpha, params.beta, params.noise)
}

/// On-disk JSON shape: `{alpha, beta, noise, links: [{id, sx, sy, rx, ry}]}`.
#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
struct TopologyDoc<T> {
    alpha: T,
    beta: T,
    noise: T,
    links: Vec<LinkDoc<T>>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
struct LinkDoc<T> {
    id: usize,
    sx: T,
    sy: T,
    rx: T,
    ry: T,
}

impl<T: Scalar> TryFrom<TopologyDoc<T>> for Topology<T> {
    type Error = Error;

    fn try_from(doc: TopologyDoc<T>) -> Result<Self> {
        let mut links = Vec::with_capacity(doc.links.len());
        for (i, l) in doc.links.into_iter().enumerate() {
            if l.id != i {
                return Err(Error::InvalidParameter(format!(
                    "link ids must be 0..n-1 in order; position {i} has id {}",
                    l.id
                )));
            }
            links.push(Link::new(i, Point::new(l.sx, l.sy), Point::new(l.rx, l.ry)));
        }
        Topology::new(links, doc.alpha, doc.beta, doc.noise)
    }
}

impl<T: Scalar> From<Topology<T>> for TopologyDoc<T> {
    fn from(t: Topology<T>) -> Self {
        TopologyDoc {
            alpha: t.alpha,
            beta: t.beta,
            noise: t.noise,
            links: t
                .links
                .iter()
                .map(|l| LinkDoc {
                    id: l.id,
                    sx: l.sender.x,
                    sy: l.sender.y,
                    rx: l.receiver.x,
                    ry: l.receiver.y,
                })
                .collect(),
        }
    }
}
