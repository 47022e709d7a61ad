use crate::audio::{power_of, AudioClip};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Amplitude factor that puts `noise_power` at `snr_db` below `signal_power`.
pub fn gain_for_snr<T: Scalar>(signal_power: T, noise_power: T, snr_db: T) -> Result<T> {
    if !(signal_power > T::zero()) {
        return Err(Error::Silent("signal"));
    }
    if !(noise_power > T::zero()) {
        return Err(Error::Silent("noise"));
    }
    let ratio = T::lit(10.0).powf(snr_db / T::lit(10.0));
    Ok((signal_power / (noise_power * ratio)).sqrt())
}

/// Result of mixing one noise segment into a clean clip.
#[derive(Debug, Clone)]
pub struct Mixture<T> {
    /// Mixed signal after the clipping policy.
    pub clip: AudioClip<T>,
    /// `gain · noise`, before any rescale.
    pub noise_component: AudioClip<T>,
    pub gain: T,
    /// Whole-clip factor applied by the clipping policy (1 when unclipped).
    pub rescale: T,
}

/// Adds `noise` to `clean` at `snr_db` under the full-clip power definition.
///
/// If the sum leaves [-1, 1] the whole clip is scaled by `1 / peak`, which
/// keeps the SNR exact.
pub fn mix_at_snr<T: Scalar>(clean: &AudioClip<T>, noise: &AudioClip<T>, snr_db: T) -> Result<Mixture<T>> {
    check_compatible(clean, noise)?;
    let gain = gain_for_snr(power_of(clean.samples())?, power_of(noise.samples())?, snr_db)?;
    let noise_component = noise.scaled(gain);
    let summed: Vec<T> = clean
        .samples()
        .iter()
        .zip(noise_component.samples())
        .map(|(&c, &n)| c + n)
        .collect();
    let mixed = AudioClip::new(summed, clean.sample_rate())?;
    let rescale = clip_rescale(mixed.peak());
    Ok(Mixture {
        clip: if rescale < T::one() { mixed.scaled(rescale) } else { mixed },
        noise_component,
        gain,
        rescale,
    })
}

pub(crate) fn check_compatible<T: Scalar>(a: &AudioClip<T>, b: &AudioClip<T>) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.sample_rate() != b.sample_rate() {
        return Err(Error::InvalidArgument(format!(
            "sample rates differ: {} vs {}",
            a.sample_rate(),
            b.sample_rate()
        )));
    }
    Ok(())
}

/// Rescale factor demanded by the clipping policy for a given peak.
pub(crate) fn clip_rescale<T: Scalar>(peak: T) -> T {
    if peak > T::one() {
        T::one() / peak
    } else {
        T::one()
    }
}

/// Measured SNR in dB between a clean clip and an additive noise component.
pub fn measured_snr_db<T: Scalar>(clean: &AudioClip<T>, noise_component: &AudioClip<T>) -> Result<T> {
    let ps = power_of(clean.samples())?;
    let pn = power_of(noise_component.samples())?;
    Ok(T::lit(10.0) * (ps / pn).log10())
}
