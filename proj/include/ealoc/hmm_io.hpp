#pragma once

// Plain-text HmmParams format (whitespace separated, '#' starts a comment):
//
//   T M
//   prior_0 ... prior_{T-1}
//   trans row 0
//   ...            (T rows)
//   mu row 0
//   ...            (T rows of M values)
//   sigma row 0
//   ...            (T rows of M values)
//
// Values are written with 17 significant digits so files round-trip exactly.

#include "ealoc/hmm.hpp"

#include <iosfwd>
#include <string>

namespace ealoc {

void write_hmm(std::ostream& os, const HmmParamsd& params);
HmmParamsd read_hmm(std::istream& is);

void save_hmm(const std::string& path, const HmmParamsd& params);
HmmParamsd load_hmm(const std::string& path);

}  // namespace ealoc
