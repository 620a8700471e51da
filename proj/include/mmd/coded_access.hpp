#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mmd/dsamp.hpp"
#include "mmd/fec.hpp"
#include "mmd/metrics.hpp"

namespace mmd {

/// Seed of the shared signature sequence known to every device and the receiver.
inline constexpr std::uint64_t kSignatureSeed = 0x5349474e41545552ULL;

struct PacketLayout {
  int ls = 20;      ///< signature bits
  int ld = 100;     ///< payload bits
  Bits signature;   ///< ls bits, identical for all devices

  int l() const { return ls + ld; }
  static PacketLayout make(int ls = 20, int ld = 100, std::uint64_t signature_seed = kSignatureSeed);
};

Bits make_signature(int ls, std::uint64_t seed = kSignatureSeed);

/// Signature first, payload after.
Bits build_packet(std::span<const std::uint8_t> payload, const PacketLayout& layout);

/// Receiver options of the coded chain. The named variants are
///   idsamp:              interleave, SIC, quality judgement
///   idsamp-nojudge:      SIC cancels every decoded candidate
///   coded-nosic:         interleave, single decoding pass
///   coded-nointerleave:  identity interleaver, single decoding pass
struct CodedFlags {
  bool interleave = true;
  bool sic = true;
  bool judge = true;
};

/// Static parts of a coded scenario: code, interleaver, constellation, layout.
/// `sys.j` is forced to the coded frame length L' / eta.
struct CodedSetup {
  SystemConfig sys;
  PacketLayout layout;
  TurboCodec codec;
  BlockInterleaver interleaver;
  Constellation c;
  int nbar = 5;  ///< SIC candidates per round

  CodedSetup(SystemConfig sys, PacketLayout layout, int turbo_iterations = 8, double extrinsic_scale = 0.75);
  int eta() const { return sys.eta(); }
};

/// Transmitted (coded, optionally interleaved) bit stream of one packet.
Bits bicmm_bits(std::span<const std::uint8_t> packet, const CodedSetup& setup, bool interleave = true);

/// encode -> interleave -> eta-bit groups -> media symbols (J of them).
std::vector<MediaSymbol> bicmm_encode(std::span<const std::uint8_t> packet, const CodedSetup& setup,
                                      bool interleave = true);

struct CodedFrame {
  MediaFrame frame;             ///< source_bits hold the transmitted coded bits
  std::vector<Bits> payloads;   ///< ld bits per active device
  std::vector<Bits> packets;    ///< l bits per active device
};

CodedFrame build_coded_frame(const CodedSetup& setup, const ActivityVector& activity,
                             const std::vector<Bits>& payloads, bool interleave = true);
CodedFrame build_coded_frame(const CodedSetup& setup, const ActivityVector& activity, Rng& payload_rng,
                             bool interleave = true);

/// Bit LLRs (Nrf pattern bits, then QAM bits) of one device-slot from the Nt
/// per-element log pmfs. The joint posterior over the Nt*M one-hot candidates
/// is the product of the element marginals; sums are taken in the log domain
/// and saturated at +-kLlrMax. Both sets empty gives 0.
std::vector<double> compute_symbol_llrs(std::span<const double> block_log_pmf, int nt, int nrf,
                                        const Constellation& c);

/// LLRs of all J slots of device `k` (index into the state), in transmission order.
std::vector<double> device_llrs(const AmpState& s, int k, int nrf, const Constellation& c);

/// Deinterleave (if enabled) and turbo-decode a device's LLR stream.
TurboDecodeResult decode_device(std::span<const double> llrs, const CodedSetup& setup, bool interleave = true);

int hamming_distance(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

struct JudgeOutcome {
  std::vector<int> m;       ///< signature distance per candidate, in candidate order
  std::vector<int> omega3;  ///< candidates with distance 0
  bool terminate = false;   ///< no candidate qualifies
};

JudgeOutcome decoding_quality_judge(const std::vector<int>& omega2, const std::vector<Bits>& decoded,
                                    const PacketLayout& layout);

struct IdsampState {
  std::vector<int> omega0;      ///< initially detected devices
  std::vector<int> omega1;      ///< still to be cancelled
  std::vector<int> omega2;      ///< this round's candidates
  std::vector<int> omega3;      ///< this round's cancellations
  std::vector<int> lambda_set;  ///< cancelled so far
  std::vector<Bits> decoded;    ///< K rows of decoded packets (empty if never decoded)
  std::vector<int> m;
  CMat y_cur;
  CMat h_cur;
  std::vector<int> column_devices;  ///< original device of each Nt-block of h_cur
};

/// Re-encode the packets of omega3, subtract their signals using H0, drop them
/// from omega1 and remove their pattern columns from the working channel.
void reconstruct_and_cancel(IdsampState& st, const std::vector<int>& omega3, const CMat& h0,
                            const CodedSetup& setup, bool interleave = true);

struct IdsampResult {
  std::vector<int> omega0;
  std::vector<Bits> packets;   ///< K rows; decoded packet or empty
  std::vector<Bits> payloads;  ///< K rows; payload part of `packets`
  std::vector<int> cancelled;  ///< Lambda at termination
  int rounds = 0;
  DetectionResult first_pass;  ///< first DS-AMP pass with Omega_0, for hard-decision comparisons
};

IdsampResult run_idsamp(const CMat& y, const CMat& h0, const CodedSetup& setup, const CodedFlags& flags,
                        const DsampParams& params);

/// Coded error tallies: ADER from Omega_0, BER over payload bits, SER by
/// re-encoding the decoded packets and comparing the transmitted symbols.
ErrorCounts count_coded_errors(const CodedFrame& truth, const IdsampResult& result, const CodedSetup& setup,
                               bool interleave = true);

}  // namespace mmd
