#include "promptseg/cli.hpp"

int main(int argc, char** argv) {
    return promptseg::run_cli(argc, argv);
}
