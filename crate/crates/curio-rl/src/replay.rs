//! Experience storage: a fixed-capacity ring buffer sampled uniformly with
//! replacement.
//!
//! Observations arrive quantized to the 1/255 grid (the renderer guarantees
//! it), so they are packed as bytes and reproduced bit-exactly on read.

use curio_nn::Tensor;
use rand::Rng;

#[derive(Debug, Clone)]
struct PackedObs {
    /// Original [H, W, C] shape; bytes are kept channel-major ([C, H, W]) so
    /// training code can unpack straight into the conv layout.
    shape: Vec<usize>,
    data: Box<[u8]>,
}

impl PackedObs {
    fn pack(obs: &Tensor) -> Self {
        assert_eq!(obs.shape.len(), 3, "expected [H, W, C] observation");
        let (h, w, c) = (obs.shape[0], obs.shape[1], obs.shape[2]);
        let mut data = vec![0u8; h * w * c];
        for y in 0..h {
            for x in 0..w {
                let base = (y * w + x) * c;
                for ch in 0..c {
                    let v = obs.data[base + ch];
                    let q = (v * 255.0).round();
                    debug_assert!(
                        (v - q / 255.0).abs() < 1e-12,
                        "observation pixel {v} is not on the 1/255 grid"
                    );
                    data[ch * h * w + y * w + x] = q as u8;
                }
            }
        }
        Self {
            shape: obs.shape.clone(),
            data: data.into_boxed_slice(),
        }
    }

    /// Channel-major [C, H, W] tensor, the layout the encoder consumes.
    fn unpack_planes(&self) -> Tensor {
        let (h, w, c) = (self.shape[0], self.shape[1], self.shape[2]);
        let data: Vec<f64> = self.data.iter().map(|&q| q as f64 / 255.0).collect();
        Tensor::new(vec![c, h, w], data).expect("packed shape is consistent")
    }

    /// Original [H, W, C] observation.
    fn unpack(&self) -> Tensor {
        let (h, w, c) = (self.shape[0], self.shape[1], self.shape[2]);
        let mut out = Tensor::zeros(self.shape.clone());
        for ch in 0..c {
            for y in 0..h {
                for x in 0..w {
                    out.data[(y * w + x) * c + ch] =
                        self.data[ch * h * w + y * w + x] as f64 / 255.0;
                }
            }
        }
        out
    }
}

/// One stored experience: raw observations, their collection-time latent
/// codes, the executed (post-noise) action, the combined reward used by the
/// critic and the extrinsic reward used by the dynamics model.
#[derive(Debug, Clone)]
pub struct Transition {
    obs: PackedObs,
    next_obs: PackedObs,
    pub latent: Vec<f64>,
    pub next_latent: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub reward_ext: f64,
    pub done: bool,
}

#[allow(clippy::too_many_arguments)]
impl Transition {
    pub fn new(
        obs: &Tensor,
        latent: Vec<f64>,
        action: Vec<f64>,
        reward: f64,
        reward_ext: f64,
        next_obs: &Tensor,
        next_latent: Vec<f64>,
        done: bool,
    ) -> Self {
        Self {
            obs: PackedObs::pack(obs),
            next_obs: PackedObs::pack(next_obs),
            latent,
            next_latent,
            action,
            reward,
            reward_ext,
            done,
        }
    }

    pub fn obs(&self) -> Tensor {
        self.obs.unpack()
    }

    pub fn next_obs(&self) -> Tensor {
        self.next_obs.unpack()
    }

    /// Stored observation in the conv layout [C, H, W].
    pub fn obs_planes(&self) -> Tensor {
        self.obs.unpack_planes()
    }

    /// Stored next observation in the conv layout [C, H, W].
    pub fn next_obs_planes(&self) -> Tensor {
        self.next_obs.unpack_planes()
    }
}

/// Ring buffer of transitions; oldest entries are evicted first.
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "capacity must be positive");
        Self {
            capacity,
            items: Vec::with_capacity(capacity.min(4096)),
            next: 0,
        }
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
            self.next = (self.next + 1) % self.capacity;
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, i: usize) -> &Transition {
        &self.items[i]
    }

    /// Uniform sample with replacement across current contents.
    pub fn sample<'a, R: Rng>(&'a self, rng: &mut R, n: usize) -> Vec<&'a Transition> {
        assert!(!self.items.is_empty(), "cannot sample an empty buffer");
        (0..n)
            .map(|_| &self.items[rng.gen_range(0..self.items.len())])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn obs(v: f64) -> Tensor {
        let q = (v.clamp(0.0, 1.0) * 255.0).round() / 255.0;
        Tensor::filled(vec![2, 2, 1], q)
    }

    fn tr(id: f64) -> Transition {
        Transition::new(
            &obs(id / 20.0),
            vec![id],
            vec![0.0],
            id,
            id,
            &obs(id / 20.0),
            vec![id],
            false,
        )
    }

    #[test]
    fn packing_round_trips_quantized_pixels() {
        let o = obs(0.73);
        let packed = Transition::new(&o, vec![], vec![], 0.0, 0.0, &o, vec![], false);
        assert_eq!(packed.obs().data, o.data);
    }

    #[test]
    fn ring_evicts_oldest_first() {
        let mut buf = ReplayBuffer::new(3);
        for i in 0..5 {
            buf.push(tr(i as f64 / 255.0 * 255.0)); // rewards carry the id
        }
        assert_eq!(buf.len(), 3);
        let rewards: Vec<f64> = (0..3).map(|i| buf.get(i).reward).collect();
        // Slots 0 and 1 were overwritten by items 3 and 4.
        assert_eq!(rewards, vec![3.0, 4.0, 2.0]);
    }

    #[test]
    fn sampling_is_uniform_chi_square() {
        let mut buf = ReplayBuffer::new(20);
        for i in 0..20 {
            buf.push(tr(i as f64));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 100_000usize;
        let mut counts = [0usize; 20];
        for t in buf.sample(&mut rng, n) {
            counts[t.reward as usize] += 1;
        }
        let expected = n as f64 / 20.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // df = 19, critical value at p = 0.01 is 36.19; staying below it means
        // the uniformity hypothesis is not rejected.
        assert!(chi2 < 36.19, "chi-square statistic {chi2}");
    }
}
