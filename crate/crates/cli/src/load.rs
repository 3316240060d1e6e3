use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use ttrecon::context::ModeTable;
use ttrecon::{parse_context, ApplicationModel, ContextEvent, PlatformModel, Profile, RecoveryLog, Schedule};

use crate::ModelArgs;

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

pub fn models(args: &ModelArgs) -> Result<(ApplicationModel, PlatformModel)> {
    let tasks = read(&args.tasks)?;
    let messages = args.messages.as_deref().map(read).transpose()?;
    let am = ApplicationModel::from_csv(&tasks, messages.as_deref())
        .with_context(|| format!("invalid application model {}", args.tasks.display()))?;
    let pm = PlatformModel::from_text(&read(&args.platform)?)
        .with_context(|| format!("invalid platform model {}", args.platform.display()))?;
    Ok((am, pm))
}

pub fn mode_table(path: Option<&Path>) -> Result<ModeTable> {
    match path {
        None => Ok(ModeTable::default()),
        Some(p) => ModeTable::from_text(&read(p)?).with_context(|| format!("invalid mode table {}", p.display())),
    }
}

pub fn profile(name: Option<&str>) -> Result<Option<Profile>> {
    name.map(|n| n.parse::<Profile>().context("invalid --profile")).transpose()
}

pub fn context(path: &Path) -> Result<Vec<ContextEvent>> {
    parse_context(&read(path)?).with_context(|| format!("invalid context file {}", path.display()))
}

pub fn schedule(path: &Path) -> Result<Schedule> {
    Schedule::from_text(&read(path)?).with_context(|| format!("invalid schedule {}", path.display()))
}

pub fn log(path: &Path) -> Result<RecoveryLog> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    RecoveryLog::from_bytes(&bytes).with_context(|| format!("invalid recovery log {}", path.display()))
}
