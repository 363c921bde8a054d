#pragma once

#include <string>
#include <string_view>

namespace qeck {

// Classic Porter (1980) suffix stripper, matching the behavior of the
// author's reference implementation: words of length <= 2 are returned
// unchanged, step 2 uses bli->ble and includes logi->log.
// Input is expected to be lowercase; non-alphabetic input passes through
// the rules unharmed (consonant-classified).
std::string porter_stem(std::string_view word);

}  // namespace qeck
