#include "tangleforge/cli.hpp"

#include <cstdio>
#include <string>
#include <vector>

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    const tangleforge::cli::RunReport rep = tangleforge::cli::run(args);
    if (!rep.stdout_text.empty()) std::fwrite(rep.stdout_text.data(), 1, rep.stdout_text.size(), stdout);
    if (!rep.stderr_text.empty()) std::fwrite(rep.stderr_text.data(), 1, rep.stderr_text.size(), stderr);
    return rep.exit_code;
}
