#pragma once

#include <string>
#include <vector>

#include "cbipc/config.hpp"
#include "cbipc/error.hpp"

namespace cbipc::cli {

enum ExitCode { Ok = 0, Failure = 1, ValidationFailure = 2, CertificateInvalid = 3, QuadratureFailure = 4 };

int exit_code_for(ErrorCode code);

struct RunOutput {
    json summary;     // written to <out>.json
    std::string csv;  // written to <out>.csv
    int exit_code = Ok;
};

// Runs one experiment; the summary embeds the resolved config (without workers) and a timestamp.
RunOutput run_experiment(const ExperimentConfig& cfg);

// Column header of the CSV of an experiment.
const char* csv_header(const std::string& experiment);

const std::vector<std::string>& experiment_names();

// Entry point of the command line tool.
int main(int argc, char** argv);

}  // namespace cbipc::cli
