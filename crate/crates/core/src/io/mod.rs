//! Files: instance JSON, schedule CSV with a metrics sidecar, and seeded
//! random instances.

mod generate;
mod instance_file;
mod schedule;

pub use generate::{generate_instance, DemandProfile, GeneratorConfig};
pub use instance_file::{
    instance_from_json, instance_to_json, load_instance, save_instance, SCHEMA_VERSION,
};
pub use schedule::{
    read_schedule, read_schedule_csv, sidecar_path, write_schedule, write_schedule_csv,
    MetricsBlock, Provenance, ScheduleReport,
};
