#pragma once

#include <string>
#include <utility>
#include <vector>

#include "trainer.hpp"

namespace cdc {

// Inputs for a run report. config is required; every other section appears
// only when its pointer is set. Rendering is deterministic: identical
// inputs produce byte-identical text.
struct ReportInputs {
    const TrainConfig* config = nullptr;
    const TemplateBank* bank = nullptr;
    const TrainingHistory* history = nullptr;
    const EvalReport* eval = nullptr;
    std::vector<std::pair<std::string, std::string>> extra;  // leading [config] lines
};

std::string render_run_report(const ReportInputs& in);
void write_run_report(const ReportInputs& in, const std::string& path);

}  // namespace cdc
