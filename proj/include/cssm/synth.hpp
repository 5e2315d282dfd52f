#pragma once

#include "cssm/signal_types.hpp"

namespace cssm {

// Generates a balanced synthetic motor-imagery style dataset. Class c carries a
// band-limited Hann-windowed burst (carrier drawn from the configured band) on
// its informative electrodes, added to unit-variance broadband Gaussian noise.
// Burst power on an informative electrode is depth^2 * 10^(snr_db/10) relative
// to the noise power. Sample values are quantized to IEEE-754 single precision
// so that the on-disk format round-trips bit-exactly.
//
// Group ids are assigned per sample (group_id == sample index); grouped k-fold
// splits over synthetic data therefore act at the sample level.
LabeledDataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace cssm
