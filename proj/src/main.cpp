#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include "wqed/run.hpp"

int main(int argc, char** argv) {
    CLI::App app{"waveguide array spectra: Hamiltonian builders, effective models and sweeps"};
    std::string task, config_path, out_dir;
    int threads = 0;
    bool force = false;
    app.add_option("task", task,
                   "h0-spectrum | full-ed | swt | heff | sweep-eta | sweep-theta | "
                   "sweep-beta | analyze | labels")
        ->required();
    app.add_option("--config", config_path, "JSON config path")->required();
    app.add_option("--out", out_dir, "output directory (overrides config)");
    app.add_flag("--force", force, "overwrite existing output files");
    app.add_option("--threads", threads, "worker threads (fallback: WQED_THREADS env)")
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        wqed::RunConfig cfg = wqed::load_config(config_path);
        if (cfg.task != task)
            throw wqed::validation_error("task mismatch: command line says '" + task +
                                         "' but config says '" + cfg.task + "'");
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (force) cfg.force = true;
        if (app.count("--threads")) {
            cfg.threads = threads;
        } else if (const char* env = std::getenv("WQED_THREADS")) {
            char* end = nullptr;
            const long v = std::strtol(env, &end, 10);
            if (end == env || *end != '\0' || v < 1)
                throw wqed::validation_error("WQED_THREADS must be a positive integer");
            cfg.threads = static_cast<int>(v);
        }
        wqed::run_and_write(cfg);
        return 0;
    } catch (const wqed::Error& e) {
        std::cerr << "error [" << e.kind << "]: " << e.what() << "\n";
        return e.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
