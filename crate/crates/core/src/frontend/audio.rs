use std::io::{self, Read};
use std::path::Path;

use crate::error::{Error, Result};

/// Only 16 kHz mono PCM is accepted anywhere in the engine.
pub const SAMPLE_RATE: u32 = 16_000;
/// 25 ms analysis window.
pub const WINDOW_SAMPLES: usize = 400;
/// 10 ms hop between frames.
pub const HOP_SAMPLES: usize = 160;
/// Audio time covered by one frame hop.
pub const FRAME_MS: f64 = 10.0;

/// Signed 16-bit mono PCM at 16 kHz.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AudioBuffer {
    samples: Vec<i16>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<i16>, sample_rate: u32) -> Result<Self> {
        if sample_rate != SAMPLE_RATE {
            return Err(Error::UnsupportedRate(sample_rate));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// Wraps samples already known to be 16 kHz.
    pub fn from_samples(samples: Vec<i16>) -> Self {
        Self {
            samples,
            sample_rate: SAMPLE_RATE,
        }
    }

    pub fn samples(&self) -> &[i16] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<i16> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_ms(&self) -> f64 {
        self.samples.len() as f64 * 1000.0 / f64::from(self.sample_rate)
    }

    /// Reads a RIFF WAV file. Anything other than 16-bit integer mono 16 kHz
    /// is rejected.
    pub fn read_wav(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::from(e).at(path))?;
        Self::from_wav_reader(io::BufReader::new(file)).map_err(|e| e.at(path))
    }

    pub fn from_wav_reader<R: Read>(reader: R) -> Result<Self> {
        let wav = hound::WavReader::new(reader).map_err(wav_error)?;
        let spec = wav.spec();
        if spec.channels != 1 {
            return Err(Error::AudioFormat(format!(
                "{} channels, expected mono",
                spec.channels
            )));
        }
        if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
            return Err(Error::AudioFormat(format!(
                "{}-bit {:?} samples, expected 16-bit integer PCM",
                spec.bits_per_sample, spec.sample_format
            )));
        }
        if spec.sample_rate != SAMPLE_RATE {
            return Err(Error::UnsupportedRate(spec.sample_rate));
        }
        let samples = wav
            .into_samples::<i16>()
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(wav_error)?;
        Ok(Self::from_samples(samples))
    }

    pub fn write_wav(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: self.sample_rate,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let write = || -> std::result::Result<(), hound::Error> {
            let mut writer = hound::WavWriter::create(path, spec)?;
            for &s in &self.samples {
                writer.write_sample(s)?;
            }
            writer.finalize()
        };
        write().map_err(|e| wav_error(e).at(path))
    }

    /// Reads headerless signed 16-bit little-endian PCM until end of input.
    pub fn read_raw<R: Read>(reader: R) -> Result<Self> {
        let mut pcm = RawPcmReader::new(reader);
        let mut samples = Vec::new();
        while let Some(chunk) = pcm.next_chunk(8192)? {
            samples.extend_from_slice(&chunk);
        }
        Ok(Self::from_samples(samples))
    }
}

fn wav_error(e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::Io(io),
        other => Error::AudioFormat(other.to_string()),
    }
}

/// Incremental decoder for headerless s16le PCM. Reads may split samples
/// across byte boundaries; a dangling odd byte at end of input is an error.
#[derive(Debug)]
pub struct RawPcmReader<R> {
    inner: R,
    carry: Option<u8>,
    buf: Vec<u8>,
}

impl<R: Read> RawPcmReader<R> {
    pub fn new(inner: R) -> Self {
        Self {
            inner,
            carry: None,
            buf: Vec::new(),
        }
    }

    /// Returns up to `max_samples` samples, or `None` at a clean end of input.
    pub fn next_chunk(&mut self, max_samples: usize) -> Result<Option<Vec<i16>>> {
        let max_samples = max_samples.max(1);
        self.buf.resize(max_samples * 2, 0);
        let start = usize::from(self.carry.is_some());
        if let Some(b) = self.carry.take() {
            self.buf[0] = b;
        }
        let n = loop {
            match self.inner.read(&mut self.buf[start..]) {
                Ok(n) => break n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(e.into()),
            }
        };
        let filled = start + n;
        if n == 0 {
            if start == 1 {
                return Err(Error::AudioFormat(
                    "raw PCM stream ended on an odd byte".into(),
                ));
            }
            return Ok(None);
        }
        let whole = filled / 2 * 2;
        if whole < filled {
            self.carry = Some(self.buf[whole]);
        }
        let samples = self.buf[..whole]
            .chunks_exact(2)
            .map(|b| i16::from_le_bytes([b[0], b[1]]))
            .collect();
        Ok(Some(samples))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_other_rates() {
        assert!(matches!(
            AudioBuffer::new(vec![0; 10], 8000),
            Err(Error::UnsupportedRate(8000))
        ));
    }

    #[test]
    fn wav_round_trip_and_format_checks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.wav");
        let audio = AudioBuffer::from_samples((0..1000).map(|i| (i * 7 - 3000) as i16).collect());
        audio.write_wav(&path).unwrap();
        assert_eq!(AudioBuffer::read_wav(&path).unwrap(), audio);

        let stereo = dir.path().join("s.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 16000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&stereo, spec).unwrap();
        w.write_sample(1i16).unwrap();
        w.write_sample(1i16).unwrap();
        w.finalize().unwrap();
        let err = AudioBuffer::read_wav(&stereo).unwrap_err();
        assert!(matches!(err.root(), Error::AudioFormat(_)));

        let fast = dir.path().join("f.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 44100,
            ..spec
        };
        let mut w = hound::WavWriter::create(&fast, spec).unwrap();
        w.write_sample(1i16).unwrap();
        w.finalize().unwrap();
        let err = AudioBuffer::read_wav(&fast).unwrap_err();
        assert!(matches!(err.root(), Error::UnsupportedRate(44100)));
    }

    /// Reader that hands out one byte per call.
    struct Trickle<'a>(&'a [u8]);

    impl Read for Trickle<'_> {
        fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
            if self.0.is_empty() || buf.is_empty() {
                return Ok(0);
            }
            buf[0] = self.0[0];
            self.0 = &self.0[1..];
            Ok(1)
        }
    }

    #[test]
    fn raw_reader_reassembles_split_samples() {
        let samples: Vec<i16> = vec![1, -2, 300, -32768, 32767];
        let bytes: Vec<u8> = samples.iter().flat_map(|s| s.to_le_bytes()).collect();
        let audio = AudioBuffer::read_raw(Trickle(&bytes)).unwrap();
        assert_eq!(audio.samples(), &samples[..]);

        let err = AudioBuffer::read_raw(&bytes[..3]).unwrap_err();
        assert!(matches!(err, Error::AudioFormat(_)));
    }
}
