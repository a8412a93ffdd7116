#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "evfusion/dataset.hpp"

namespace evfusion {

class DataFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One numeric CSV per modality (rows = samples) plus a label file holding one integer class id per row.
/// A first line with a non-numeric cell is taken as a header. Features are returned as read; callers
/// standardize with statistics from their training split. `classes` = 0 infers max label + 1.
MultimodalBatch load_feature_csv(const std::vector<std::filesystem::path>& feature_paths,
                                 const std::filesystem::path& label_path, std::size_t classes = 0);

/// Writes <prefix>_view<v>.csv, <prefix>_labels.csv and <prefix>_conflict.csv under `dir`.
void write_feature_csv(const MultimodalBatch& batch, const std::filesystem::path& dir, const std::string& prefix);

}  // namespace evfusion
