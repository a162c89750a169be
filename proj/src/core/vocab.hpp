#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace m2oe {

// Fixed amino-acid vocabulary: the 20 canonical residues in this order,
// then UNK and PAD.
inline constexpr const char *kAminoAcidOrder = "ACDEFGHIKLMNPQRSTVWY";
inline constexpr int kUnkId = 20;
inline constexpr int kPadId = 21;
inline constexpr int kVocabSize = 22;

// canonical residue -> 0..19, any other uppercase letter -> UNK
int token_id(char residue);
// inverse for display; UNK -> 'X'
char token_char(int id);

bool valid_sequence(const std::string &sequence);

struct TokenizedSequence {
  std::vector<int> ids;             // length max_len, PAD-filled tail
  std::vector<std::uint8_t> mask;   // true where a real residue sits
};

TokenizedSequence tokenize(const std::string &sequence, int max_len);
// string over the non-PAD prefix
std::string detokenize(const std::vector<int> &ids);

} // namespace m2oe
