#ifndef MTPS_JSON_IO_HPP
#define MTPS_JSON_IO_HPP

#include <string>

#include <json.hpp>

#include <mtps/gaussian.hpp>

namespace mtps {

    using json = nlohmann::json;

    json vec_to_json(const Vec& v);
    /// Row-major nested arrays.
    json mat_to_json(const Mat& m);

    /// Field accessors that throw LoadError naming `field` when it is missing or malformed.
    const json& require(const json& j, const std::string& field);
    Vec vec_field(const json& j, const std::string& field);
    Mat mat_field(const json& j, const std::string& field);
    double double_field(const json& j, const std::string& field);
    long long int_field(const json& j, const std::string& field);
    std::string string_field(const json& j, const std::string& field);

    json task_to_json(const TaskSpec& t);
    TaskSpec task_from_json(const json& j);

    /// Dumps with 2-space indentation; doubles are written in shortest round-trip form.
    std::string dump(const json& j);
    void write_json_file(const std::string& path, const json& j);
    json read_json_file(const std::string& path);

} // namespace mtps

#endif
