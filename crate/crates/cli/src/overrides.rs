use serde_json::Value;

/// Where a `--set` assignment lands.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Target {
    Controller,
    Scenario,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub target: Target,
    /// Dotted path inside the target document.
    pub path: Vec<String>,
    pub value: Value,
}

/// Parses `key=value`. Keys under `planner.` and the key `const_speed` address
/// the controller settings; every other key addresses the scenario document.
/// Values are read as JSON and fall back to a plain string.
pub fn parse_assignment(text: &str) -> Result<Assignment, String> {
    let (key, raw) = text
        .split_once('=')
        .ok_or_else(|| format!("`{text}` is not of the form key=value"))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(format!("`{text}` has an empty key segment"));
    }
    let path: Vec<String> = key.split('.').map(str::to_string).collect();
    let target = if path[0] == "planner" || key == "const_speed" {
        Target::Controller
    } else {
        Target::Scenario
    };
    let raw = raw.trim();
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok(Assignment {
        target,
        path,
        value,
    })
}

/// Replaces an existing entry of `doc`; unknown keys are rejected.
pub fn apply(doc: &mut Value, path: &[String], value: Value) -> Result<(), String> {
    let mut node = doc;
    for (depth, part) in path.iter().enumerate() {
        let key = path[..=depth].join(".");
        node = match node {
            Value::Object(map) => map
                .get_mut(part)
                .ok_or_else(|| format!("unknown setting `{key}`"))?,
            Value::Array(items) => {
                let index: usize = part
                    .parse()
                    .map_err(|_| format!("`{key}`: `{part}` is not a list index"))?;
                let len = items.len();
                items
                    .get_mut(index)
                    .ok_or_else(|| format!("`{key}`: index {index} out of range ({len} items)"))?
            }
            _ => return Err(format!("unknown setting `{key}`")),
        };
    }
    *node = value;
    Ok(())
}
