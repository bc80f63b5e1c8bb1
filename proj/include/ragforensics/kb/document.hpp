#pragma once

#include <map>
#include <string>
#include <string_view>

namespace ragforensics::kb {

enum class LabelKind { Benign, Poisoned, Proxy };

/// Provenance of a stored text. `ref` is the attack id for Poisoned and the
/// target document id for Proxy; it is empty for Benign.
struct DocumentLabel {
  LabelKind kind = LabelKind::Benign;
  std::string ref;

  static DocumentLabel benign() { return {}; }
  static DocumentLabel poisoned(std::string attack_id) {
    return {LabelKind::Poisoned, std::move(attack_id)};
  }
  static DocumentLabel proxy(std::string target_id) {
    return {LabelKind::Proxy, std::move(target_id)};
  }

  bool operator==(const DocumentLabel&) const = default;
};

struct Document {
  std::string id;
  std::string content;
  DocumentLabel label;
  std::map<std::string, std::string> metadata;

  bool operator==(const Document&) const = default;
};

std::string_view to_string(LabelKind kind);
LabelKind label_kind_from_string(std::string_view s);

}  // namespace ragforensics::kb
