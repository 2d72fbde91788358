#include "rlmtkit/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "rlmtkit/errors.hpp"

namespace rlmtkit {
namespace checkpoint {

namespace {

std::string fmt17(double v) {
    char buf[64];
    snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string next_line(std::istream& in, const char* what) {
    std::string line;
    if (!std::getline(in, line))
        throw DataError(std::string("checkpoint truncated: expected ") + what);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

}  // namespace

void save(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open checkpoint for writing: " + path);

    out << kHeader << "\n";

    out << "vocab " << ckpt.vocab.symbols().size();
    for (char c : ckpt.vocab.symbols())
        out << ' ' << static_cast<int>(static_cast<unsigned char>(c));
    out << "\n";

    std::string cfg_text = config::to_key_values(ckpt.config);
    int cfg_lines = 0;
    for (char c : cfg_text)
        if (c == '\n') ++cfg_lines;
    out << "config " << cfg_lines << "\n" << cfg_text;

    out << "step " << ckpt.step << "\n";
    out << "rng " << ckpt.rng_state << "\n";

    ckpt.params.for_each_tensor([&](const char* name, const Mat& m) {
        out << "tensor " << name << ' ' << m.rows << ' ' << m.cols << "\n";
        for (int r = 0; r < m.rows; ++r) {
            for (int c = 0; c < m.cols; ++c) {
                if (c) out << ' ';
                out << fmt17(m(r, c));
            }
            out << "\n";
        }
    });
    out << "end\n";
    if (!out) throw DataError("write failure on checkpoint: " + path);
}

Checkpoint load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint: " + path);

    std::string header = next_line(in, "header");
    if (header != kHeader) {
        if (header.rfind("RLMTKIT-CKPT", 0) == 0)
            throw DataError("checkpoint version mismatch: got '" + header +
                            "', expected '" + kHeader + "'");
        throw DataError("not a checkpoint file (bad header): " + path);
    }

    Checkpoint ckpt;

    {
        std::istringstream ls(next_line(in, "vocab line"));
        std::string tag;
        size_t count = 0;
        if (!(ls >> tag >> count) || tag != "vocab")
            throw DataError("checkpoint: malformed vocab line");
        std::string symbols;
        for (size_t i = 0; i < count; ++i) {
            int byte = 0;
            if (!(ls >> byte) || byte < 0 || byte > 255)
                throw DataError("checkpoint: malformed vocab byte list");
            symbols += static_cast<char>(static_cast<unsigned char>(byte));
        }
        ckpt.vocab = Vocab(symbols);
        if (ckpt.vocab.symbols().size() != count)
            throw DataError("checkpoint: duplicate vocab symbols");
    }

    {
        std::istringstream ls(next_line(in, "config line"));
        std::string tag;
        int count = 0;
        if (!(ls >> tag >> count) || tag != "config" || count < 0)
            throw DataError("checkpoint: malformed config line");
        std::string cfg_text;
        for (int i = 0; i < count; ++i) cfg_text += next_line(in, "config body") + "\n";
        try {
            ckpt.config = config::parse_key_values(cfg_text, TrainConfig{});
        } catch (const InvalidInput& e) {
            throw DataError(std::string("checkpoint: bad config snapshot: ") + e.what());
        }
    }

    {
        std::istringstream ls(next_line(in, "step line"));
        std::string tag;
        if (!(ls >> tag >> ckpt.step) || tag != "step")
            throw DataError("checkpoint: malformed step line");
    }

    {
        std::string line = next_line(in, "rng line");
        if (line.rfind("rng ", 0) != 0)
            throw DataError("checkpoint: malformed rng line");
        ckpt.rng_state = line.substr(4);
        if (ckpt.rng_state.empty()) throw DataError("checkpoint: empty rng state");
    }

    const int vocab_size = ckpt.vocab.size();
    const int embed_dim = ckpt.config.embed_dim;
    ckpt.params = PolicyParams(vocab_size, embed_dim);

    ckpt.params.for_each_tensor([&](const char* name, Mat& m) {
        std::istringstream ls(next_line(in, "tensor header"));
        std::string tag, got_name;
        int rows = 0, cols = 0;
        if (!(ls >> tag >> got_name >> rows >> cols) || tag != "tensor")
            throw DataError("checkpoint: malformed tensor header");
        if (got_name != name)
            throw DataError("checkpoint: unexpected tensor '" + got_name +
                            "', expected '" + name + "'");
        if (rows != m.rows || cols != m.cols)
            throw DataError("checkpoint: tensor '" + got_name +
                            "' has inconsistent dimensions");
        for (double& v : m.a)
            if (!(in >> v))
                throw DataError("checkpoint truncated inside tensor '" + got_name + "'");
        in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
    });

    std::string footer = next_line(in, "end marker");
    if (footer != "end") throw DataError("checkpoint: missing end marker");
    if (!ckpt.params.finite()) throw DataError("checkpoint: non-finite parameters");
    return ckpt;
}

}  // namespace checkpoint
}  // namespace rlmtkit
