#include "mfrc/cli.hpp"

int main(int argc, char** argv) { return mfrc::cli_main(argc, argv); }
