use rand::Rng;

use crate::audio::AudioClip;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Draws a noise segment of `length` samples.
///
/// Sources at least as long as the request yield a contiguous slice at a
/// uniform offset into the source. Shorter sources (impulses) are placed
/// whole at a uniform onset inside a zero buffer; the returned offset is then
/// the onset within the output. Either way [`replay_segment`] rebuilds the
/// segment from the offset.
pub fn sample_segment<T: Scalar, R: Rng>(noise: &AudioClip<T>, length: usize, rng: &mut R) -> Result<(AudioClip<T>, usize)> {
    if length == 0 {
        return Err(Error::InvalidArgument("segment length must be positive".into()));
    }
    if noise.is_empty() {
        return Err(Error::Empty("noise source".into()));
    }
    let span = noise.len().abs_diff(length);
    let offset = rng.random_range(0..=span);
    Ok((replay_segment(noise, length, offset)?, offset))
}

pub fn replay_segment<T: Scalar>(noise: &AudioClip<T>, length: usize, offset: usize) -> Result<AudioClip<T>> {
    if noise.is_empty() {
        return Err(Error::Empty("noise source".into()));
    }
    if noise.len() >= length {
        if offset + length > noise.len() {
            return Err(Error::InvalidArgument(format!(
                "offset {offset} out of range for source of {} samples",
                noise.len()
            )));
        }
        Ok(noise.slice(offset, length))
    } else {
        if offset + noise.len() > length {
            return Err(Error::InvalidArgument(format!(
                "onset {offset} does not fit a {}-sample impulse in {length} samples",
                noise.len()
            )));
        }
        let mut buf = vec![T::zero(); length];
        buf[offset..offset + noise.len()].copy_from_slice(noise.samples());
        AudioClip::new(buf, noise.sample_rate())
    }
}
