// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "imtk/examples.hpp"
#include "imtk/groupoid.hpp"
#include "imtk/rank_one.hpp"

namespace imtk {

/// A model file could not be loaded.
class ModelError : public std::runtime_error {
 public:
  enum class Kind { io, syntax, schema, parse, dimension };

  ModelError(Kind kind, std::string pointer, const std::string& what, std::size_t offset = 0)
      : std::runtime_error(what), kind_(kind), pointer_(std::move(pointer)), offset_(offset) {}

  Kind kind() const { return kind_; }
  /// JSON pointer of the offending value.
  const std::string& pointer() const { return pointer_; }
  /// Byte offset inside the expression string (parse errors only).
  std::size_t offset() const { return offset_; }

 private:
  Kind kind_;
  std::string pointer_;
  std::size_t offset_;
};

struct GroupoidSection {
  ActionGroupoid gpd;
  ExprMatrix splitting;  ///< k x d
  FiniteDifference fd;
};

struct WitnessSection {
  WitnessKind kind = WitnessKind::product;
  RankOneWitness witness;
};

/// Validated contents of a model file. Frame indices are 1-based in the file.
struct ModelFile {
  Chart chart;
  std::optional<LieAlgebroid> algebroid;
  std::optional<int> ideal;
  std::optional<IMForm> im_form;
  std::optional<CouplingData> coupling;
  std::optional<GroupoidSection> groupoid;
  std::optional<ExampleSpec> example;
  std::optional<WitnessSection> witness;

  /// Names of the sections present, in schema order.
  std::vector<std::string> sections() const;
};

inline constexpr int kModelVersion = 1;

ModelFile load_model(const std::string& path);
ModelFile parse_model(std::string_view text);
/// Pretty-printed JSON that parse_model reads back.
std::string dump_model(const ModelFile& m);

/// Named parameter sets accepted by an example section's "preset" field.
std::vector<std::string> example_presets();
ExampleSpec example_preset(const std::string& name);

}  // namespace imtk
