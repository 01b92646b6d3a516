#include <vector>

#include "qemlab/commands.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return qemlab::run_cli(args);
}
