use super::{conv2d, Activation, ConvSpec, Grid};
use crate::error::{config_err, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    /// Both convs keep `N_in` channels.
    Plain,
    /// First conv narrows to `N_mid < N_in`, second widens back.
    Bottleneck,
}

/// `x + conv2(leaky(conv1(x)))` with 3×3 stride-1 convs.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualBlock<S: Scalar = f32> {
    kind: BlockKind,
    conv1: ConvSpec<S>,
    conv2: ConvSpec<S>,
}

impl<S: Scalar> ResidualBlock<S> {
    pub fn plain(conv1: ConvSpec<S>, conv2: ConvSpec<S>) -> Result<Self> {
        let n = conv1.in_channels();
        if conv1.out_channels() != n || conv2.in_channels() != n || conv2.out_channels() != n {
            return Err(config_err!("plain residual block convs must all be {n}->{n}"));
        }
        Self::checked(BlockKind::Plain, conv1, conv2)
    }

    pub fn bottleneck(conv1: ConvSpec<S>, conv2: ConvSpec<S>) -> Result<Self> {
        let (n, mid) = (conv1.in_channels(), conv1.out_channels());
        if mid >= n {
            return Err(config_err!("bottleneck middle width {mid} must be below {n}"));
        }
        if conv2.in_channels() != mid || conv2.out_channels() != n {
            return Err(config_err!(
                "bottleneck second conv must be {mid}->{n}, got {}->{}",
                conv2.in_channels(),
                conv2.out_channels()
            ));
        }
        Self::checked(BlockKind::Bottleneck, conv1, conv2)
    }

    fn checked(kind: BlockKind, conv1: ConvSpec<S>, conv2: ConvSpec<S>) -> Result<Self> {
        for c in [&conv1, &conv2] {
            if c.kernel_size() != 3 || c.stride() != 1 {
                return Err(config_err!("residual block convs must be 3x3 stride 1"));
            }
        }
        Ok(Self {
            kind,
            conv1: conv1.with_activation(Activation::Leaky),
            conv2: conv2.with_activation(Activation::None),
        })
    }

    /// All-zero block of width `channels` (and `mid` for bottlenecks); forwards input unchanged.
    pub fn zeros(kind: BlockKind, channels: usize, mid: usize) -> Result<Self> {
        let mid = if kind == BlockKind::Plain { channels } else { mid };
        let c1 = ConvSpec::zeros(3, channels, mid, 1, Activation::Leaky)?;
        let c2 = ConvSpec::zeros(3, mid, channels, 1, Activation::None)?;
        match kind {
            BlockKind::Plain => Self::plain(c1, c2),
            BlockKind::Bottleneck => Self::bottleneck(c1, c2),
        }
    }

    pub fn kind(&self) -> BlockKind {
        self.kind
    }
    pub fn channels(&self) -> usize {
        self.conv1.in_channels()
    }
    pub fn conv1(&self) -> &ConvSpec<S> {
        &self.conv1
    }
    pub fn conv2(&self) -> &ConvSpec<S> {
        &self.conv2
    }

    pub fn cast<T: Scalar>(&self) -> ResidualBlock<T> {
        ResidualBlock { kind: self.kind, conv1: self.conv1.cast(), conv2: self.conv2.cast() }
    }
}

pub fn residual_forward<S: Scalar>(input: &Grid<S>, block: &ResidualBlock<S>) -> Result<Grid<S>> {
    if input.channels() != block.channels() {
        return Err(config_err!(
            "residual block expects {} channels, got {}",
            block.channels(),
            input.channels()
        ));
    }
    let hidden = conv2d(input, &block.conv1)?;
    let residue = conv2d(&hidden, &block.conv2)?;
    input.add(&residue)
}
