//! Typed protocol messages and the trace event stream detectors consume.
//!
//! Messages are typed records, not bit-exact PDUs; there is no ASN.1
//! encoding. Traces export as JSONL, one event per line, with a stable
//! field order so golden files diff cleanly.

use serde::{Deserialize, Serialize};

use crate::phy::RfFeatureVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Rrc,
    Nas,
    Mac,
    Phy,
}

/// Protocol and event kinds carried in a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MsgKind {
    Mib,
    /// SIB type 1..=24.
    Sib(u8),
    Paging,
    IdentityRequest,
    IdentityResponse,
    NasReject,
    AttachRequest,
    TauRequest,
    RrcSetup,
    RrcRelease,
    RrcReconfiguration,
    MeasurementReport,
    Rlf,
    HandoverFailure,
    ReestablishmentRequest,
    ReestablishmentReject,
    SecurityModeCommand,
    SmsDeliver,
}

impl MsgKind {
    pub fn as_str(&self) -> String {
        match self {
            MsgKind::Mib => "mib".into(),
            MsgKind::Sib(n) => format!("sib{n}"),
            MsgKind::Paging => "paging".into(),
            MsgKind::IdentityRequest => "identity_request".into(),
            MsgKind::IdentityResponse => "identity_response".into(),
            MsgKind::NasReject => "nas_reject".into(),
            MsgKind::AttachRequest => "attach_request".into(),
            MsgKind::TauRequest => "tau_request".into(),
            MsgKind::RrcSetup => "rrc_setup".into(),
            MsgKind::RrcRelease => "rrc_release".into(),
            MsgKind::RrcReconfiguration => "rrc_reconfiguration".into(),
            MsgKind::MeasurementReport => "measurement_report".into(),
            MsgKind::Rlf => "rlf".into(),
            MsgKind::HandoverFailure => "handover_failure".into(),
            MsgKind::ReestablishmentRequest => "reestablishment_request".into(),
            MsgKind::ReestablishmentReject => "reestablishment_reject".into(),
            MsgKind::SecurityModeCommand => "security_mode_command".into(),
            MsgKind::SmsDeliver => "sms_deliver".into(),
        }
    }

    fn parse(s: &str) -> Option<MsgKind> {
        if let Some(rest) = s.strip_prefix("sib") {
            if let Ok(n) = rest.parse::<u8>() {
                if (1..=24).contains(&n) {
                    return Some(MsgKind::Sib(n));
                }
            }
        }
        Some(match s {
            "mib" => MsgKind::Mib,
            "paging" => MsgKind::Paging,
            "identity_request" => MsgKind::IdentityRequest,
            "identity_response" => MsgKind::IdentityResponse,
            "nas_reject" => MsgKind::NasReject,
            "attach_request" => MsgKind::AttachRequest,
            "tau_request" => MsgKind::TauRequest,
            "rrc_setup" => MsgKind::RrcSetup,
            "rrc_release" => MsgKind::RrcRelease,
            "rrc_reconfiguration" => MsgKind::RrcReconfiguration,
            "measurement_report" => MsgKind::MeasurementReport,
            "rlf" => MsgKind::Rlf,
            "handover_failure" => MsgKind::HandoverFailure,
            "reestablishment_request" => MsgKind::ReestablishmentRequest,
            "reestablishment_reject" => MsgKind::ReestablishmentReject,
            "security_mode_command" => MsgKind::SecurityModeCommand,
            "sms_deliver" => MsgKind::SmsDeliver,
            _ => return None,
        })
    }
}

impl Serialize for MsgKind {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.as_str())
    }
}

impl<'de> Deserialize<'de> for MsgKind {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        MsgKind::parse(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown message kind `{s}`")))
    }
}

/// Redirection vector carried in an RRC Connection Release or SIB7.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RedirectVector {
    Sib7Priority,
    RedirectedCarrierInfo,
    IdleModeMobilityControlInfo,
}

/// Reestablishment cause as reported by the UE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReestablishCause {
    OtherFailure,
    HandoverFailure,
}

/// Optional message payload fields. Only populated fields serialize.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct MsgFields {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reject_cause: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub redirect_vector: Option<RedirectVector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_earfcn: Option<u32>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub contains_imsi: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub imsi: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reestablish_cause: Option<ReestablishCause>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub null_cipher: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
    // broadcast identity fields (MIB/SIB1)
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plmn: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tac: Option<u16>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cell_id: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub earfcn: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pci: Option<u16>,
    /// Legacy-priority map advertised in SIB7 or idleModeMobilityControlInfo.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub legacy_top_priority_earfcn: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolMessage {
    pub layer: Layer,
    pub kind: MsgKind,
    #[serde(default)]
    pub fields: MsgFields,
}

impl ProtocolMessage {
    pub fn new(layer: Layer, kind: MsgKind) -> Self {
        ProtocolMessage {
            layer,
            kind,
            fields: MsgFields::default(),
        }
    }
}

/// Physical-layer observables attached to an event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct PhyInfo {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rsrp_dbm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ta_command: Option<u16>,
    /// Cumulative frame timing error at this event's time.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frame_timing_error_ns: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rf: Option<RfFeatureVector>,
}

pub const BROADCAST: &str = "broadcast";

/// One timestamped observation; the unit detectors consume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub t_ms: u64,
    pub src: String,
    pub dst: String,
    pub msg: ProtocolMessage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phy: Option<PhyInfo>,
}

impl TraceEvent {
    pub fn new(
        t_ms: u64,
        src: impl Into<String>,
        dst: impl Into<String>,
        msg: ProtocolMessage,
    ) -> Self {
        TraceEvent {
            t_ms,
            src: src.into(),
            dst: dst.into(),
            msg,
            phy: None,
        }
    }

    pub fn with_phy(mut self, phy: PhyInfo) -> Self {
        self.phy = Some(phy);
        self
    }

    /// RRC-failure events: the anomalies hijacking can leave behind.
    pub fn is_rrc_failure(&self) -> bool {
        matches!(
            self.msg.kind,
            MsgKind::Rlf
                | MsgKind::HandoverFailure
                | MsgKind::ReestablishmentRequest
                | MsgKind::ReestablishmentReject
        )
    }
}

/// Serialize a trace to JSONL, one event per line.
pub fn to_jsonl(events: &[TraceEvent]) -> serde_json::Result<String> {
    let mut out = String::new();
    for ev in events {
        out.push_str(&serde_json::to_string(ev)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn from_jsonl(text: &str) -> serde_json::Result<Vec<TraceEvent>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn msg_kind_string_round_trip() {
        for kind in [
            MsgKind::Mib,
            MsgKind::Sib(1),
            MsgKind::Sib(7),
            MsgKind::Sib(24),
            MsgKind::NasReject,
            MsgKind::ReestablishmentRequest,
        ] {
            assert_eq!(MsgKind::parse(&kind.as_str()), Some(kind));
        }
        assert_eq!(MsgKind::parse("sib25"), None);
        assert_eq!(MsgKind::parse("sib0"), None);
        assert_eq!(MsgKind::parse("warp"), None);
    }

    #[test]
    fn jsonl_round_trip() {
        let mut msg = ProtocolMessage::new(Layer::Nas, MsgKind::NasReject);
        msg.fields.reject_cause = Some(9);
        let events = vec![
            TraceEvent::new(0, "fbs-0", "ue-0", msg),
            TraceEvent::new(
                100,
                "ue-0",
                "fbs-0",
                ProtocolMessage::new(Layer::Nas, MsgKind::AttachRequest),
            ),
        ];
        let text = to_jsonl(&events).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(from_jsonl(&text).unwrap(), events);
    }
}
