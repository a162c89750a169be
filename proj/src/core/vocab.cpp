#include "core/vocab.hpp"

#include <cstring>

#include "core/error.hpp"

namespace m2oe {

int token_id(char residue) {
  const char *pos = std::strchr(kAminoAcidOrder, residue);
  if (pos != nullptr && *pos != '\0') {
    return static_cast<int>(pos - kAminoAcidOrder);
  }
  return kUnkId;
}

char token_char(int id) {
  if (id >= 0 && id < 20) {
    return kAminoAcidOrder[id];
  }
  if (id == kUnkId) {
    return 'X';
  }
  if (id == kPadId) {
    return '-';
  }
  fail(ErrorKind::Internal, "token id " + std::to_string(id) + " out of range");
}

bool valid_sequence(const std::string &sequence) {
  if (sequence.empty()) {
    return false;
  }
  for (char c : sequence) {
    if (c < 'A' || c > 'Z') {
      return false;
    }
  }
  return true;
}

TokenizedSequence tokenize(const std::string &sequence, int max_len) {
  if (sequence.empty()) {
    fail(ErrorKind::Validation, "cannot tokenize an empty sequence");
  }
  if (max_len < 1) {
    fail(ErrorKind::Validation, "max_len must be at least 1");
  }
  if (static_cast<int>(sequence.size()) > max_len) {
    fail(ErrorKind::Validation,
         "sequence length " + std::to_string(sequence.size()) +
             " exceeds max length " + std::to_string(max_len));
  }
  if (!valid_sequence(sequence)) {
    fail(ErrorKind::Validation,
         "sequence contains characters outside A-Z: '" + sequence + "'");
  }
  TokenizedSequence out;
  out.ids.assign(max_len, kPadId);
  out.mask.assign(max_len, 0);
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    out.ids[i] = token_id(sequence[i]);
    out.mask[i] = 1;
  }
  return out;
}

std::string detokenize(const std::vector<int> &ids) {
  std::string out;
  out.reserve(ids.size());
  for (int id : ids) {
    if (id == kPadId) {
      break;
    }
    out.push_back(token_char(id));
  }
  return out;
}

} // namespace m2oe
