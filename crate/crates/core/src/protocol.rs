//! Closed-loop feedback protocol.
//!
//! Both ends share the codebooks, the rotation schedule `rho(n) = n mod K`
//! and the pseudo-random puncture schedule `zeta(n)`. At decision slot `n`
//! the receiver selects from child `rho(n)` with entry `zeta(n)` replaced by
//! the default matrix, and sends the winning `L`-bit index. The transmitter
//! applies it `D` slots later: the reserved index means "keep the current
//! matrix", any other index selects that entry of child `rho(n)`.
//!
//! Schedules are evaluated at the decision slot. The receiver's default for
//! decision `n` is the outcome of its own decision `n - 1`, which is exactly
//! the matrix the transmitter holds when decision `n` reaches it.

use std::collections::VecDeque;
use std::fmt;

use crate::codebook::{alter, ChildCodebookSet, CodebookView, PrecodingMatrix};
use crate::linalg::CMatrix;
use crate::precoding::{select_with, CapacityEvaluator};
use crate::seeds::mix64;
use crate::{Error, Result};

/// Rotation schedule: the child codebook used at slot `n`.
pub fn rho(n: u64, k: usize) -> usize {
    (n % k as u64) as usize
}

/// Puncture schedule: the reserved index at slot `n` for `l`-bit codebooks.
pub fn zeta(n: u64, l: u32, seed: u64) -> usize {
    let z = mix64(seed ^ n);
    if l == 0 {
        0
    } else if l >= 64 {
        z as usize
    } else {
        (z & ((1u64 << l) - 1)) as usize
    }
}

/// Shared rotation and puncture schedules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schedules {
    pub k: usize,
    pub l: u32,
    pub seed: u64,
}

impl Schedules {
    pub fn rho(&self, n: u64) -> usize {
        rho(n, self.k)
    }

    pub fn zeta(&self, n: u64) -> usize {
        zeta(n, self.l, self.seed)
    }
}

/// An `L`-bit precoder index sent over the feedback channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FeedbackMessage {
    index: usize,
}

impl FeedbackMessage {
    pub fn new(index: usize, bits: u32) -> Result<Self> {
        if bits < usize::BITS && index >= 1usize << bits {
            return Err(Error::IndexOutOfRange {
                index,
                size: 1usize << bits,
            });
        }
        Ok(Self { index })
    }

    pub fn index(self) -> usize {
        self.index
    }
}

/// Transmission scheme compared by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// No feedback; a random entry of an `l`-bit codebook each slot.
    OpenLoop { l: u32 },
    /// One `l`-bit codebook, every entry selectable.
    Conventional { l: u32 },
    /// `k` rotating `l`-bit children with the default-matrix index.
    Rotating { l: u32, k: usize },
    /// The SVD-optimal precoder, fed back without quantization.
    Unquantized,
}

impl Scheme {
    /// Short name used in CSV output.
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::OpenLoop { .. } => "openloop",
            Scheme::Conventional { .. } => "conv",
            Scheme::Rotating { .. } => "rot",
            Scheme::Unquantized => "unq",
        }
    }

    /// Stable numeric id for seed derivation.
    pub fn id(&self) -> u64 {
        match *self {
            Scheme::OpenLoop { l } => 1 << 32 | l as u64,
            Scheme::Conventional { l } => 2 << 32 | l as u64,
            Scheme::Rotating { l, k } => 3 << 32 | (k as u64) << 8 | l as u64,
            Scheme::Unquantized => 4 << 32,
        }
    }

    /// Feedback bits per message (`None` for unquantized feedback).
    pub fn feedback_bits(&self) -> Option<u32> {
        match *self {
            Scheme::OpenLoop { .. } => Some(0),
            Scheme::Conventional { l } | Scheme::Rotating { l, .. } => Some(l),
            Scheme::Unquantized => None,
        }
    }

    /// Number of rotating codebooks.
    pub fn k(&self) -> usize {
        match *self {
            Scheme::Rotating { k, .. } => k,
            _ => 1,
        }
    }

    /// Bits of the mother codebook this scheme draws from.
    pub fn codebook_bits(&self) -> u32 {
        match *self {
            Scheme::OpenLoop { l } | Scheme::Conventional { l } => l,
            Scheme::Rotating { l, k } => l + k.trailing_zeros(),
            Scheme::Unquantized => 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Scheme::Rotating { k, .. } = *self {
            if k == 0 || !k.is_power_of_two() {
                return Err(Error::Config(format!(
                    "rotating scheme needs K a power of two >= 1, got {k}"
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Scheme::OpenLoop { l } => write!(f, "openloop(L={l})"),
            Scheme::Conventional { l } => write!(f, "conv(L={l})"),
            Scheme::Rotating { l, k } => write!(f, "rot(L={l},K={k})"),
            Scheme::Unquantized => f.write_str("unq"),
        }
    }
}

/// Position of a matrix in the child codebook set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EntryRef {
    pub codebook: usize,
    pub index: usize,
}

const INITIAL: EntryRef = EntryRef {
    codebook: 0,
    index: 0,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pending {
    /// Bootstrap slot before the first feedback arrives.
    Hold,
    Message {
        slot: u64,
        msg: FeedbackMessage,
        /// The default the receiver assumed when deciding.
        assumed: EntryRef,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Conventional,
    Rotating,
}

/// Shared state of one closed-loop link.
///
/// The receiver and transmitter halves are tracked separately; the feedback
/// pipeline between them holds `delay` messages.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkState<'c> {
    codebooks: &'c ChildCodebookSet,
    mode: Mode,
    schedules: Schedules,
    delay: usize,
    rx_default: EntryRef,
    rx_slot: u64,
    tx_default: EntryRef,
    tx_slot: u64,
    pending: VecDeque<Pending>,
}

impl<'c> LinkState<'c> {
    /// Initializes both ends with entry 0 of codebook 0 as the default and
    /// `delay` bootstrap slots in the pipeline.
    ///
    /// For [`Scheme::Conventional`] only the first child is used and the
    /// default-matrix mechanism is off.
    pub fn new(
        scheme: Scheme,
        codebooks: &'c ChildCodebookSet,
        delay: usize,
        puncture_seed: u64,
    ) -> Result<Self> {
        let mode = match scheme {
            Scheme::Conventional { l } => {
                if codebooks.bits() != l {
                    return Err(Error::Protocol(format!(
                        "conventional L={l} given {}-bit codebooks",
                        codebooks.bits()
                    )));
                }
                Mode::Conventional
            }
            Scheme::Rotating { l, k } => {
                scheme.validate()?;
                if codebooks.bits() != l || codebooks.k() != k {
                    return Err(Error::Protocol(format!(
                        "rotating L={l}, K={k} given {} children of {} bits",
                        codebooks.k(),
                        codebooks.bits()
                    )));
                }
                Mode::Rotating
            }
            other => {
                return Err(Error::Protocol(format!("{other} has no feedback link")));
            }
        };
        Ok(Self {
            codebooks,
            mode,
            schedules: Schedules {
                k: codebooks.k(),
                l: codebooks.bits(),
                seed: puncture_seed,
            },
            delay,
            rx_default: INITIAL,
            rx_slot: 0,
            tx_default: INITIAL,
            tx_slot: 0,
            pending: std::iter::repeat_n(Pending::Hold, delay).collect(),
        })
    }

    pub fn schedules(&self) -> Schedules {
        self.schedules
    }

    pub fn delay(&self) -> usize {
        self.delay
    }

    fn resolve(&self, at: EntryRef) -> &'c PrecodingMatrix {
        self.codebooks.child(at.codebook).entry(at.index)
    }

    /// The receiver's reconstruction of the default for its next decision.
    pub fn receiver_default(&self) -> &'c PrecodingMatrix {
        self.resolve(self.rx_default)
    }

    /// The matrix the transmitter used most recently.
    pub fn transmitter_default(&self) -> &'c PrecodingMatrix {
        self.resolve(self.tx_default)
    }

    pub fn receiver_default_ref(&self) -> EntryRef {
        self.rx_default
    }

    pub fn transmitter_default_ref(&self) -> EntryRef {
        self.tx_default
    }

    /// Messages in flight.
    pub fn in_flight(&self) -> usize {
        self.pending.len()
    }

    /// Receiver decision at slot `n`; the message is queued for the
    /// transmitter and also returned.
    pub fn receiver_feedback(
        &mut self,
        h: &CMatrix,
        gamma: f64,
        n: u64,
    ) -> Result<FeedbackMessage> {
        let mut eval = CapacityEvaluator::new(h, gamma)?;
        self.receiver_feedback_with(&mut eval, n)
    }

    /// [`receiver_feedback`](Self::receiver_feedback) with a caller-owned evaluator.
    pub fn receiver_feedback_with(
        &mut self,
        eval: &mut CapacityEvaluator<'_>,
        n: u64,
    ) -> Result<FeedbackMessage> {
        if n != self.rx_slot {
            return Err(Error::Protocol(format!(
                "receiver expected slot {}, got {n}",
                self.rx_slot
            )));
        }
        let assumed = self.rx_default;
        let (index, outcome) = match self.mode {
            Mode::Conventional => {
                let (i, _) = select_with(eval, self.codebooks.child(0))?;
                (
                    i,
                    EntryRef {
                        codebook: 0,
                        index: i,
                    },
                )
            }
            Mode::Rotating => {
                let child = self.schedules.rho(n);
                let reserved = self.schedules.zeta(n);
                let view = alter(self.codebooks.child(child), reserved, self.resolve(assumed))?;
                let (i, _) = select_with(eval, &view)?;
                let outcome = if i == reserved {
                    assumed
                } else {
                    EntryRef {
                        codebook: child,
                        index: i,
                    }
                };
                (i, outcome)
            }
        };
        let msg = FeedbackMessage::new(index, self.schedules.l)?;
        self.rx_default = outcome;
        self.rx_slot += 1;
        self.pending.push_back(Pending::Message {
            slot: n,
            msg,
            assumed,
        });
        Ok(msg)
    }

    /// Transmitter update for a message decided at `decision_slot`; returns
    /// the matrix to apply.
    pub fn transmitter_apply(
        &mut self,
        msg: FeedbackMessage,
        decision_slot: u64,
    ) -> Result<&'c PrecodingMatrix> {
        let size = 1usize << self.schedules.l;
        if msg.index >= size {
            return Err(Error::IndexOutOfRange {
                index: msg.index,
                size,
            });
        }
        self.tx_default = match self.mode {
            Mode::Conventional => EntryRef {
                codebook: 0,
                index: msg.index,
            },
            Mode::Rotating if msg.index == self.schedules.zeta(decision_slot) => self.tx_default,
            Mode::Rotating => EntryRef {
                codebook: self.schedules.rho(decision_slot),
                index: msg.index,
            },
        };
        Ok(self.transmitter_default())
    }

    /// Pops the message due at slot `n` (decided at `n - D`) and applies it.
    pub fn transmitter_step(&mut self, n: u64) -> Result<&'c PrecodingMatrix> {
        if n != self.tx_slot {
            return Err(Error::Protocol(format!(
                "transmitter expected slot {}, got {n}",
                self.tx_slot
            )));
        }
        let next = self
            .pending
            .pop_front()
            .ok_or_else(|| Error::Protocol(format!("no feedback due at slot {n}")))?;
        self.tx_slot += 1;
        match next {
            Pending::Hold => Ok(self.transmitter_default()),
            Pending::Message { slot, msg, assumed } => {
                if slot + self.delay as u64 != n {
                    return Err(Error::Protocol(format!(
                        "message from slot {slot} arrived at slot {n} with delay {}",
                        self.delay
                    )));
                }
                if self.mode == Mode::Rotating && assumed != self.tx_default {
                    return Err(Error::Protocol(format!(
                        "default matrices diverged at slot {n}: receiver assumed {assumed:?}, transmitter holds {:?}",
                        self.tx_default
                    )));
                }
                self.transmitter_apply(msg, slot)
            }
        }
    }

    /// One full slot: receiver decides on `h`, transmitter applies whatever
    /// feedback is due. Returns the applied matrix.
    pub fn step(&mut self, h: &CMatrix, gamma: f64, n: u64) -> Result<&'c PrecodingMatrix> {
        let mut eval = CapacityEvaluator::new(h, gamma)?;
        self.step_with(&mut eval, n)
    }

    pub fn step_with(
        &mut self,
        eval: &mut CapacityEvaluator<'_>,
        n: u64,
    ) -> Result<&'c PrecodingMatrix> {
        self.receiver_feedback_with(eval, n)?;
        self.transmitter_step(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{gen_mother_codebook, split_codebook};
    use crate::linalg::complex_gaussian;
    use crate::precoding::capacity;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rotation_schedule() {
        assert_eq!(rho(0, 4), 0);
        assert_eq!(rho(5, 4), 1);
        for n in 0..100 {
            assert_eq!(rho(n + 4, 4), rho(n, 4));
            assert_eq!(rho(n, 1), 0);
        }
    }

    #[test]
    fn puncture_schedule_basics() {
        for n in 0..1000 {
            assert_eq!(zeta(n, 4, 17), zeta(n, 4, 17));
            assert!(zeta(n, 4, 17) < 16);
            assert_eq!(zeta(n, 0, 17), 0);
        }
    }

    #[test]
    fn message_range() {
        assert!(FeedbackMessage::new(15, 4).is_ok());
        assert!(matches!(
            FeedbackMessage::new(16, 4),
            Err(Error::IndexOutOfRange {
                index: 16,
                size: 16
            })
        ));
    }

    fn rotating_set() -> ChildCodebookSet {
        let mother = gen_mother_codebook(5, 4, 1, 3).unwrap();
        split_codebook(&mother, 3).unwrap()
    }

    #[test]
    fn initial_state_and_bootstrap() {
        let set = rotating_set();
        let scheme = Scheme::Rotating { l: 3, k: 4 };
        let a = LinkState::new(scheme, &set, 1, 9).unwrap();
        let b = LinkState::new(scheme, &set, 1, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.in_flight(), 1);
        assert_eq!(a.transmitter_default(), set.child(0).entry(0));

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = complex_gaussian(&mut rng, 1, 4);
        let mut link = a;
        // D = 1: slot 0 transmits with the initial matrix.
        let applied = link.step(&h, 1.0, 0).unwrap();
        assert_eq!(applied, set.child(0).entry(0));
    }

    #[test]
    fn zero_delay_applies_immediately() {
        let set = rotating_set();
        let mut link = LinkState::new(Scheme::Rotating { l: 3, k: 4 }, &set, 0, 9).unwrap();
        assert_eq!(link.in_flight(), 0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = complex_gaussian(&mut rng, 1, 4);
        let applied = link.step(&h, 1.0, 0).unwrap().clone();
        assert_eq!(&applied, link.receiver_default());
        // Slot 0's decision covers child 0 plus the default, so it is the best there.
        let best = set
            .child(0)
            .iter()
            .map(|f| capacity(&h, f, 1.0).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((capacity(&h, &applied, 1.0).unwrap() - best).abs() < 1e-12);
    }

    #[test]
    fn reserved_index_keeps_default() {
        let set = rotating_set();
        let mut link = LinkState::new(Scheme::Rotating { l: 3, k: 4 }, &set, 0, 5).unwrap();
        let s = link.schedules();
        let before = link.transmitter_default().clone();
        let msg = FeedbackMessage::new(s.zeta(0), 3).unwrap();
        assert_eq!(link.transmitter_apply(msg, 0).unwrap(), &before);
        let msg = FeedbackMessage::new(s.zeta(1), 3).unwrap();
        assert_eq!(link.transmitter_apply(msg, 1).unwrap(), &before);
        assert_eq!(link.transmitter_default(), &before);

        let other = (s.zeta(2) + 1) % 8;
        let msg = FeedbackMessage::new(other, 3).unwrap();
        let applied = link.transmitter_apply(msg, 2).unwrap();
        assert_eq!(applied, set.child(s.rho(2)).entry(other));
        assert_eq!(link.transmitter_default(), applied);
    }

    #[test]
    fn transmitter_rejects_out_of_range() {
        let set = rotating_set();
        let mut link = LinkState::new(Scheme::Rotating { l: 3, k: 4 }, &set, 0, 5).unwrap();
        let msg = FeedbackMessage { index: 8 };
        assert!(matches!(
            link.transmitter_apply(msg, 0),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn slot_mismatch_is_protocol_error() {
        let set = rotating_set();
        let mut link = LinkState::new(Scheme::Rotating { l: 3, k: 4 }, &set, 1, 5).unwrap();
        let h = CMatrix::zeros(1, 4);
        assert!(matches!(
            link.receiver_feedback(&h, 1.0, 3),
            Err(Error::Protocol(_))
        ));
        assert!(matches!(link.transmitter_step(2), Err(Error::Protocol(_))));
    }

    #[test]
    fn scheme_codebook_mismatch() {
        let set = rotating_set();
        assert!(LinkState::new(Scheme::Rotating { l: 3, k: 8 }, &set, 1, 0).is_err());
        assert!(LinkState::new(Scheme::Conventional { l: 3 }, &set, 1, 0).is_ok());
        assert!(LinkState::new(Scheme::Conventional { l: 2 }, &set, 1, 0).is_err());
        assert!(LinkState::new(Scheme::Unquantized, &set, 1, 0).is_err());
    }

    #[test]
    fn frozen_revisit_returns_reserved_index() {
        let set = rotating_set();
        let mut link = LinkState::new(Scheme::Rotating { l: 3, k: 4 }, &set, 1, 21).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = complex_gaussian(&mut rng, 1, 4);
        let optimum = set
            .children()
            .iter()
            .flat_map(|c| c.iter())
            .map(|f| capacity(&h, f, 1.0).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        let mut n = 0;
        while capacity(&h, link.receiver_default(), 1.0).unwrap() < optimum {
            link.step(&h, 1.0, n).unwrap();
            n += 1;
            assert!(n < 64, "no convergence");
        }
        // Once the optimum is adopted nothing strictly better exists.
        let s = link.schedules();
        for n in n..n + 8 {
            let msg = link.receiver_feedback(&h, 1.0, n).unwrap();
            assert_eq!(msg.index(), s.zeta(n), "slot {n}");
            link.transmitter_step(n).unwrap();
        }
    }

    #[test]
    fn scheme_metadata() {
        let rot = Scheme::Rotating { l: 4, k: 64 };
        assert_eq!(rot.codebook_bits(), 10);
        assert_eq!(rot.feedback_bits(), Some(4));
        assert_eq!(rot.name(), "rot");
        assert!(Scheme::Rotating { l: 3, k: 6 }.validate().is_err());
        assert_eq!(Scheme::Unquantized.feedback_bits(), None);
        assert_ne!(
            Scheme::Conventional { l: 3 }.id(),
            Scheme::OpenLoop { l: 3 }.id()
        );
    }
}
