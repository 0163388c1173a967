//! Activation stream formats.
//!
//! Text: UTF-8, one decimal value per line, `#` comment lines and blank
//! lines ignored. The frame rate is implied by the caller (100 Hz default).
//!
//! Binary: the magic bytes `BACT`, a little-endian `u32` frame rate in frames
//! per second, then little-endian `f32` activations back to back.
//!
//! Both are read incrementally so a pipe can be tracked as it is written.

use std::io::{self, BufRead, BufReader, Chain, Cursor, Read, Write};

use crate::error::{Error, Result};

pub const BINARY_MAGIC: &[u8; 4] = b"BACT";

/// One beat activation value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivationFrame {
    pub frame_index: u64,
    /// Activation in `[0, 1]`.
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActivationFormat {
    Text,
    Binary,
}

/// Incremental activation decoder. The format is sniffed from the first four
/// bytes.
pub struct ActivationReader<R: Read> {
    inner: BufReader<Chain<Cursor<Vec<u8>>, R>>,
    format: ActivationFormat,
    frame_rate: Option<u32>,
    frame_index: u64,
    line: usize,
    clamped: usize,
    text_buf: String,
    finished: bool,
}

impl<R: Read> ActivationReader<R> {
    pub fn new(mut source: R) -> Result<Self> {
        let mut head = Vec::with_capacity(4);
        // blocks until four bytes or EOF
        (&mut source).take(4).read_to_end(&mut head)?;

        let (format, prefix) = if head.as_slice() == BINARY_MAGIC {
            (ActivationFormat::Binary, Vec::new())
        } else {
            (ActivationFormat::Text, head)
        };
        let mut inner = BufReader::new(Cursor::new(prefix).chain(source));

        let frame_rate = match format {
            ActivationFormat::Binary => {
                let mut rate = [0u8; 4];
                inner.read_exact(&mut rate).map_err(|e| match e.kind() {
                    io::ErrorKind::UnexpectedEof => {
                        Error::Binary("missing frame-rate field after magic".into())
                    }
                    _ => e.into(),
                })?;
                let rate = u32::from_le_bytes(rate);
                if rate == 0 {
                    return Err(Error::Binary("frame rate must be non-zero".into()));
                }
                Some(rate)
            }
            ActivationFormat::Text => None,
        };

        Ok(Self {
            inner,
            format,
            frame_rate,
            frame_index: 0,
            line: 0,
            clamped: 0,
            text_buf: String::new(),
            finished: false,
        })
    }

    pub fn format(&self) -> ActivationFormat {
        self.format
    }

    /// Frame rate declared by a binary header.
    pub fn frame_rate(&self) -> Option<u32> {
        self.frame_rate
    }

    /// Number of values clamped into `[0, 1]` so far.
    pub fn clamped_count(&self) -> usize {
        self.clamped
    }

    fn next_text(&mut self) -> Result<Option<f64>> {
        loop {
            self.text_buf.clear();
            if self.inner.read_line(&mut self.text_buf)? == 0 {
                return Ok(None);
            }
            self.line += 1;
            let s = self.text_buf.trim();
            if s.is_empty() || s.starts_with('#') {
                continue;
            }
            return match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Some(v)),
                _ => Err(Error::Decode {
                    line: self.line,
                    message: format!("expected a finite number, got {s:?}"),
                }),
            };
        }
    }

    fn next_binary(&mut self) -> Result<Option<f64>> {
        let mut word = [0u8; 4];
        let mut filled = 0;
        while filled < 4 {
            let n = self.inner.read(&mut word[filled..])?;
            if n == 0 {
                break;
            }
            filled += n;
        }
        match filled {
            0 => Ok(None),
            4 => {
                let v = f32::from_le_bytes(word) as f64;
                if v.is_finite() {
                    Ok(Some(v))
                } else {
                    Err(Error::Binary(format!("non-finite value at frame {}", self.frame_index)))
                }
            }
            n => Err(Error::Binary(format!(
                "truncated record at frame {} ({n} trailing bytes)",
                self.frame_index
            ))),
        }
    }
}

impl<R: Read> Iterator for ActivationReader<R> {
    type Item = Result<ActivationFrame>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.finished {
            return None;
        }
        let value = match self.format {
            ActivationFormat::Text => self.next_text(),
            ActivationFormat::Binary => self.next_binary(),
        };
        match value {
            Ok(Some(v)) => {
                let b = if (0.0..=1.0).contains(&v) {
                    v
                } else {
                    self.clamped += 1;
                    v.clamp(0.0, 1.0)
                };
                let frame = ActivationFrame { frame_index: self.frame_index, b };
                self.frame_index += 1;
                Some(Ok(frame))
            }
            Ok(None) => {
                self.finished = true;
                None
            }
            Err(e) => {
                self.finished = true;
                Some(Err(e))
            }
        }
    }
}

/// A fully decoded activation stream.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationStream {
    pub values: Vec<f64>,
    pub format: ActivationFormat,
    pub frame_rate: Option<u32>,
    pub clamped: usize,
}

/// Reads a whole activation stream into memory.
pub fn read_activation_stream<R: Read>(source: R) -> Result<ActivationStream> {
    let mut reader = ActivationReader::new(source)?;
    let mut values = Vec::new();
    for frame in reader.by_ref() {
        values.push(frame?.b);
    }
    Ok(ActivationStream {
        values,
        format: reader.format(),
        frame_rate: reader.frame_rate(),
        clamped: reader.clamped_count(),
    })
}

pub fn write_text<W: Write>(mut out: W, activations: &[f64]) -> io::Result<()> {
    for b in activations {
        writeln!(out, "{b:.6}")?;
    }
    out.flush()
}

pub fn write_binary<W: Write>(mut out: W, activations: &[f64], frame_rate: u32) -> io::Result<()> {
    out.write_all(BINARY_MAGIC)?;
    out.write_all(&frame_rate.to_le_bytes())?;
    for &b in activations {
        out.write_all(&(b as f32).to_le_bytes())?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn text_example() {
        let s = read_activation_stream("0.0\n0.5\n1.0\n".as_bytes()).unwrap();
        assert_eq!(s.values, vec![0.0, 0.5, 1.0]);
        assert_eq!(s.format, ActivationFormat::Text);
        assert_eq!(s.clamped, 0);

        let frames: Vec<ActivationFrame> = ActivationReader::new("0.0\n0.5\n1.0\n".as_bytes())
            .unwrap()
            .map(|f| f.unwrap())
            .collect();
        assert_eq!(frames[2], ActivationFrame { frame_index: 2, b: 1.0 });
    }

    #[test]
    fn comments_and_blank_lines() {
        let s = read_activation_stream("# header\n\n0.25\n  # indented\n0.75\r\n".as_bytes()).unwrap();
        assert_eq!(s.values, vec![0.25, 0.75]);
    }

    #[test]
    fn clamps_with_counter() {
        let s = read_activation_stream("1.2\n-0.5\n0.3\n".as_bytes()).unwrap();
        assert_eq!(s.values, vec![1.0, 0.0, 0.3]);
        assert_eq!(s.clamped, 2);
    }

    #[test]
    fn empty_sources() {
        assert!(read_activation_stream(&b""[..]).unwrap().values.is_empty());
        assert!(read_activation_stream(&b"# only a comment\n"[..]).unwrap().values.is_empty());
        let s = read_activation_stream(&b"BACT\x64\0\0\0"[..]).unwrap();
        assert!(s.values.is_empty());
        assert_eq!(s.frame_rate, Some(100));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = read_activation_stream("0.1\n# c\nabc\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Decode { line: 3, .. }), "{err}");
        let err = read_activation_stream("0.1\nnan\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Decode { line: 2, .. }));
    }

    #[test]
    fn short_text_is_not_mistaken_for_binary() {
        assert_eq!(read_activation_stream("1\n".as_bytes()).unwrap().values, vec![1.0]);
        assert_eq!(read_activation_stream("0.5".as_bytes()).unwrap().values, vec![0.5]);
    }

    #[test]
    fn binary_roundtrip() {
        let acts = [0.0, 0.25, 0.5, 1.0, 0.125];
        let mut buf = Vec::new();
        write_binary(&mut buf, &acts, 100).unwrap();
        assert_eq!(buf.len(), 8 + 4 * acts.len());
        let s = read_activation_stream(buf.as_slice()).unwrap();
        assert_eq!(s.values, acts);
        assert_eq!(s.format, ActivationFormat::Binary);
        assert_eq!(s.frame_rate, Some(100));
    }

    #[test]
    fn binary_errors() {
        assert!(matches!(read_activation_stream(&b"BACT\x64"[..]), Err(Error::Binary(_))));
        assert!(matches!(read_activation_stream(&b"BACT\0\0\0\0"[..]), Err(Error::Binary(_))));
        let mut buf = Vec::new();
        write_binary(&mut buf, &[0.5], 100).unwrap();
        buf.push(0);
        assert!(matches!(read_activation_stream(buf.as_slice()), Err(Error::Binary(_))));
        let mut nan = Vec::new();
        write_binary(&mut nan, &[f64::NAN], 100).unwrap();
        assert!(read_activation_stream(nan.as_slice()).is_err());
    }

    /// Reader that hands out one byte per call, like a slow pipe.
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
    fn trickling_binary_pipe() {
        let mut buf = Vec::new();
        write_binary(&mut buf, &[0.5, 0.75], 50).unwrap();
        let s = read_activation_stream(Trickle(&buf)).unwrap();
        assert_eq!(s.values, vec![0.5, 0.75]);
        assert_eq!(s.frame_rate, Some(50));
    }

    proptest! {
        #[test]
        fn decoded_values_in_unit_range(vals in prop::collection::vec(-10.0f64..10.0, 0..50)) {
            let text: String = vals.iter().map(|v| format!("{v}\n")).collect();
            let s = read_activation_stream(text.as_bytes()).unwrap();
            prop_assert_eq!(s.values.len(), vals.len());
            prop_assert!(s.values.iter().all(|b| (0.0..=1.0).contains(b)));
            let outside = vals.iter().filter(|v| !(0.0..=1.0).contains(*v)).count();
            prop_assert_eq!(s.clamped, outside);

            let mut bin = Vec::new();
            write_binary(&mut bin, &s.values, 100).unwrap();
            let back = read_activation_stream(bin.as_slice()).unwrap();
            for (a, b) in back.values.iter().zip(&s.values) {
                prop_assert!((a - b).abs() < 1e-6);
            }
        }
    }
}
