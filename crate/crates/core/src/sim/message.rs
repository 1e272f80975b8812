use bitvec::prelude::*;

/// Number of bits needed to write any ID in `0..=n`, i.e. `ceil(log2(n+1))`.
pub fn id_width(n: usize) -> u32 {
    usize::BITS - n.leading_zeros()
}

/// Per-edge, per-round bit budget `factor * ceil(log2(n+1))`.
pub fn budget(n: usize, factor: u32) -> u32 {
    factor * id_width(n)
}

/// A bit string sent over one edge direction in one round.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Message {
    bits: BitVec<u8, Msb0>,
}

impl Message {
    /// A message carrying no payload. It still occupies the edge for the round.
    pub fn empty() -> Self {
        Message::default()
    }

    pub fn flag(value: bool) -> Self {
        let mut bits = BitVec::new();
        bits.push(value);
        Message { bits }
    }

    pub fn builder() -> MessageBuilder {
        MessageBuilder { bits: BitVec::new() }
    }

    pub fn bit_len(&self) -> usize {
        self.bits.len()
    }

    pub fn reader(&self) -> MessageReader<'_> {
        MessageReader { bits: &self.bits, pos: 0 }
    }

    pub(crate) fn raw_bytes(&self) -> &[u8] {
        self.bits.as_raw_slice()
    }
}

impl std::fmt::Debug for Message {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Message(")?;
        for bit in self.bits.iter() {
            write!(f, "{}", if *bit { '1' } else { '0' })?;
        }
        write!(f, ")")
    }
}

pub struct MessageBuilder {
    bits: BitVec<u8, Msb0>,
}

impl MessageBuilder {
    /// Appends the low `width` bits of `value`, most significant first.
    pub fn push(mut self, value: u64, width: u32) -> Self {
        assert!(width <= 64, "field wider than 64 bits");
        assert!(width == 64 || value >> width == 0, "value {value} does not fit in {width} bits");
        let view = value.view_bits::<Msb0>();
        self.bits.extend_from_bitslice(&view[64 - width as usize..]);
        self
    }

    pub fn push_flag(mut self, value: bool) -> Self {
        self.bits.push(value);
        self
    }

    pub fn finish(self) -> Message {
        Message { bits: self.bits }
    }
}

pub struct MessageReader<'a> {
    bits: &'a BitSlice<u8, Msb0>,
    pos: usize,
}

impl MessageReader<'_> {
    pub fn read(&mut self, width: u32) -> Option<u64> {
        let end = self.pos + width as usize;
        if end > self.bits.len() {
            return None;
        }
        let value = if width == 0 { 0 } else { self.bits[self.pos..end].load_be::<u64>() };
        self.pos = end;
        Some(value)
    }

    pub fn read_flag(&mut self) -> Option<bool> {
        let bit = *self.bits.get(self.pos)?;
        self.pos += 1;
        Some(bit)
    }
}
