//! On-chip peripherals: the two byte ports, a byte-level UART and the
//! BCD-to-7-segment display driver.

use std::collections::VecDeque;
use std::fmt;
use std::num::NonZeroU32;

/// Capacity of each UART FIFO.
pub const UART_FIFO_DEPTH: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Device {
    Port0,
    Port1,
    Uart,
    SevenSeg,
}

impl Device {
    pub fn name(self) -> &'static str {
        match self {
            Device::Port0 => "port0",
            Device::Port1 => "port1",
            Device::Uart => "uart",
            Device::SevenSeg => "sevenseg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    In,
    Out,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::In => "in",
            Direction::Out => "out",
        })
    }
}

/// One entry of the I/O event log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IoEvent {
    pub cycle: u64,
    pub device: Device,
    pub direction: Direction,
    pub value: u8,
}

impl IoEvent {
    pub const CSV_HEADER: &'static str = "cycle,device,direction,value";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:02X}",
            self.cycle,
            self.device.name(),
            self.direction,
            self.value
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortOp {
    Write0(u8),
    Read1,
}

/// Port 0 is an output latch; port 1 is a level-sensitive input whose pins
/// are driven by the host.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct PortState {
    pub port0_latch: u8,
    pub port1_input: u8,
    /// Value captured by the most recent port 1 read.
    pub port1_sample: u8,
}

impl PortState {
    /// Performs one port access and reports it as an event. Reads do not
    /// consume the input.
    pub fn access(&mut self, op: PortOp, cycle: u64) -> IoEvent {
        let (device, direction, value) = match op {
            PortOp::Write0(v) => {
                self.port0_latch = v;
                (Device::Port0, Direction::Out, v)
            }
            PortOp::Read1 => {
                self.port1_sample = self.port1_input;
                (Device::Port1, Direction::In, self.port1_input)
            }
        };
        IoEvent {
            cycle,
            device,
            direction,
            value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum UartError {
    #[error("UART transmit FIFO overflow")]
    TxOverflow,
    #[error("UART receive FIFO overflow")]
    RxOverflow,
}

/// Byte-granular UART. A queued byte leaves the transmitter `baud_divisor`
/// cycles after it reaches the head of the FIFO.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UartModel {
    tx_queue: VecDeque<u8>,
    rx_queue: VecDeque<u8>,
    baud_divisor: NonZeroU32,
    /// Cycles left before the head of `tx_queue` is emitted; 0 when idle.
    tx_busy_cycles: u32,
}

impl UartModel {
    pub const DEFAULT_DIVISOR: u32 = 16;

    pub fn new(baud_divisor: NonZeroU32) -> UartModel {
        UartModel {
            tx_queue: VecDeque::with_capacity(UART_FIFO_DEPTH),
            rx_queue: VecDeque::new(),
            baud_divisor,
            tx_busy_cycles: 0,
        }
    }

    pub fn baud_divisor(&self) -> NonZeroU32 {
        self.baud_divisor
    }

    pub fn tx_queue(&self) -> &VecDeque<u8> {
        &self.tx_queue
    }

    pub fn rx_queue(&self) -> &VecDeque<u8> {
        &self.rx_queue
    }

    pub fn tx_busy_cycles(&self) -> u32 {
        self.tx_busy_cycles
    }

    pub fn is_transmitting(&self) -> bool {
        !self.tx_queue.is_empty()
    }

    pub fn send(&mut self, byte: u8) -> Result<(), UartError> {
        if self.tx_queue.len() >= UART_FIFO_DEPTH {
            return Err(UartError::TxOverflow);
        }
        if self.tx_queue.is_empty() {
            self.tx_busy_cycles = self.baud_divisor.get();
        }
        self.tx_queue.push_back(byte);
        Ok(())
    }

    /// Advances the transmitter and returns the bytes that finished sending.
    pub fn tick(&mut self, elapsed_cycles: u64) -> Vec<u8> {
        let mut emitted = Vec::new();
        let mut remaining = elapsed_cycles;
        while remaining > 0 && !self.tx_queue.is_empty() {
            let busy = self.tx_busy_cycles as u64;
            if remaining < busy {
                self.tx_busy_cycles -= remaining as u32;
                break;
            }
            remaining -= busy;
            emitted.extend(self.tx_queue.pop_front());
            self.tx_busy_cycles = if self.tx_queue.is_empty() {
                0
            } else {
                self.baud_divisor.get()
            };
        }
        emitted
    }

    /// Host side: a byte arrives on the receive line.
    pub fn inject_rx(&mut self, byte: u8) -> Result<(), UartError> {
        if self.rx_queue.len() >= UART_FIFO_DEPTH {
            return Err(UartError::RxOverflow);
        }
        self.rx_queue.push_back(byte);
        Ok(())
    }

    pub fn receive(&mut self) -> Option<u8> {
        self.rx_queue.pop_front()
    }

    /// Drops transmit state; received bytes still waiting are kept.
    pub fn reset(&mut self) {
        self.tx_queue.clear();
        self.tx_busy_cycles = 0;
    }
}

impl Default for UartModel {
    fn default() -> Self {
        UartModel::new(NonZeroU32::new(Self::DEFAULT_DIVISOR).unwrap())
    }
}

/// Common-cathode segment patterns, bit 0 = segment a through bit 6 = g.
const SEGMENTS: [u8; 10] = [0x3F, 0x06, 0x5B, 0x4F, 0x66, 0x6D, 0x7D, 0x07, 0x7F, 0x6F];

/// Maps a BCD digit to its `gfedcba` pattern. Non-BCD inputs blank the display.
pub fn bcd_to_7seg(digit: u8) -> u8 {
    SEGMENTS.get((digit & 0xF) as usize).copied().unwrap_or(0)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct SevenSegState {
    pub segments: u8,
    pub last_digit: u8,
}

impl SevenSegState {
    pub fn drive(&mut self, value: u16) -> u8 {
        self.last_digit = (value & 0xF) as u8;
        self.segments = bcd_to_7seg(self.last_digit);
        self.segments
    }
}

/// Everything hanging off the I/O side of the datapath.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Peripherals {
    pub ports: PortState,
    pub uart: UartModel,
    pub sevenseg: SevenSegState,
}
