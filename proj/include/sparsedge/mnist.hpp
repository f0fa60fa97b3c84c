#ifndef SPARSEDGE_MNIST_HPP
#define SPARSEDGE_MNIST_HPP

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "sparsedge/errors.hpp"

namespace sparsedge {

/// Input vectors in [0,1] zero-padded to the network's input width, one-hot
/// labels zero-padded to the output width.
struct Dataset {
    std::vector<std::vector<double>> images;
    std::vector<std::vector<double>> labels;
    int class_count = 10;

    std::size_t size() const { return images.size(); }
};

namespace detail {

inline std::uint32_t read_be32(std::istream& is, const std::string& what) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        throw IoError(IoError::Code::truncated_file, "truncated IDX header: " + what);
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
           (std::uint32_t{b[2]} << 8) | b[3];
}

}  // namespace detail

/// Parse the big-endian IDX pair and scale pixels by 1/255.
inline Dataset load_mnist(const std::string& images_path,
                          const std::string& labels_path, int pad_to_input,
                          int pad_to_output, int limit = -1,
                          int class_count = 10) {
    std::ifstream imgs(images_path, std::ios::binary);
    if (!imgs) throw IoError(IoError::Code::open_failed, "cannot open " + images_path);
    std::ifstream labs(labels_path, std::ios::binary);
    if (!labs) throw IoError(IoError::Code::open_failed, "cannot open " + labels_path);

    if (detail::read_be32(imgs, images_path) != 0x00000803u)
        throw IoError(IoError::Code::bad_magic, "bad magic in " + images_path);
    if (detail::read_be32(labs, labels_path) != 0x00000801u)
        throw IoError(IoError::Code::bad_magic, "bad magic in " + labels_path);

    const std::uint32_t n_images = detail::read_be32(imgs, images_path);
    const std::uint32_t rows = detail::read_be32(imgs, images_path);
    const std::uint32_t cols = detail::read_be32(imgs, images_path);
    const std::uint32_t n_labels = detail::read_be32(labs, labels_path);
    if (n_images != n_labels)
        throw IoError(IoError::Code::count_mismatch, "image/label counts differ");

    const int pixels = static_cast<int>(rows * cols);
    if (pad_to_input < pixels)
        throw ShapeError("network input narrower than the image");
    if (pad_to_output < class_count)
        throw ShapeError("network output narrower than the class count");

    std::size_t count = n_images;
    if (limit >= 0 && static_cast<std::size_t>(limit) < count) count = limit;

    Dataset ds;
    ds.class_count = class_count;
    ds.images.reserve(count);
    ds.labels.reserve(count);
    std::vector<unsigned char> buf(pixels);
    for (std::size_t i = 0; i < count; ++i) {
        if (!imgs.read(reinterpret_cast<char*>(buf.data()), pixels))
            throw IoError(IoError::Code::truncated_file, "truncated " + images_path);
        std::vector<double> img(pad_to_input, 0.0);
        for (int p = 0; p < pixels; ++p) img[p] = buf[p] / 255.0;
        int lab = labs.get();
        if (lab == std::char_traits<char>::eof())
            throw IoError(IoError::Code::truncated_file, "truncated " + labels_path);
        if (lab < 0 || lab >= class_count)
            throw IoError(IoError::Code::bad_format, "label out of range");
        std::vector<double> onehot(pad_to_output, 0.0);
        onehot[lab] = 1.0;
        ds.images.push_back(std::move(img));
        ds.labels.push_back(std::move(onehot));
    }
    return ds;
}

/// Index of the true class of item i (argmax over the one-hot head).
inline int label_of(const Dataset& ds, std::size_t i) {
    for (int c = 0; c < ds.class_count; ++c)
        if (ds.labels[i][c] == 1.0) return c;
    return -1;
}

}  // namespace sparsedge

#endif  // SPARSEDGE_MNIST_HPP
