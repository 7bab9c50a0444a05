import json
R = []
def r(name, pattern, action, category):
    R.append({"name": name, "pattern": pattern, "action": action, "category": category})
S, DU, DC = "strip_match", "drop_utterance", "drop_conversation"
# missing content
r("missing_null_literal", r"^\s*(null|NULL|None|none|NaN|nan|undefined)\s*$", DU, "missing_content")
r("missing_placeholder", r"^\s*[（(\[【]?\s*(内容缺失|内容为空|无内容|暂无内容|内容已删除|该内容已被删除|此消息已撤回|消息已撤回)\s*[）)\]】]?\s*$", DU, "missing_content")
r("missing_punctuation_only", r"^[\s。，、？！…．.,?!~～·\-—_]+$", DU, "missing_content")
r("missing_withdrawn_notice", r"(对方|患者|医生)?撤回了一条消息", S, "missing_content")
r("missing_cut_marker", r"[（(]\s*(此处|以下)?内容(缺失|丢失|不完整)\s*[）)]", S, "missing_content")
# images
r("image_tag", r"\[(图片|图像|照片|image|img|IMG|Image)\]", S, "image")
r("image_tag_cn", r"【(图片|图像|照片)】", S, "image")
r("image_missing_notice", r"(图片|照片|化验单|检查单)(已)?(丢失|缺失|无法显示|加载失败|未上传)", S, "image")
r("image_upload_notice", r"(患者)?上传了\s*[0-9]*\s*张(图片|照片)", S, "image")
r("image_file_name", r"[A-Za-z0-9_\-]+\.(jpg|jpeg|png|gif|bmp|webp|JPG|JPEG|PNG)", S, "image")
r("image_html", r"<img[^>]*>", S, "image")
# reward
r("reward_gift", r"(送了|送出|赠送了?)(一份|一个|一面|[0-9]+个)?(心意礼物|礼物|锦旗|鲜花)", DU, "reward")
r("reward_heart_gift", r"心意礼物", DU, "reward")
r("reward_money", r"(打赏|赏金|悬赏)了?\s*[0-9]+(\.[0-9]+)?\s*元", S, "reward")
r("reward_red_packet", r"(发了|送了|给您发了)(一个)?红包", S, "reward")
r("reward_thanks_letter", r"(写了|送了)(一封)?感谢信", DU, "reward")
# privacy
r("privacy_mobile", r"(^|[^0-9])1[3-9][0-9]{9}([^0-9]|$)", DU, "privacy")
r("privacy_id_card", r"(^|[^0-9])[0-9]{17}[0-9Xx]([^0-9]|$)", DU, "privacy")
r("privacy_email", r"[A-Za-z0-9._%+\-]+@[A-Za-z0-9.\-]+\.[A-Za-z]{2,}", DU, "privacy")
r("privacy_im_account", r"(微信号?|VX|vx|wx|WX|QQ|qq)[号:：\s]*[A-Za-z0-9_\-]{5,}", DU, "privacy")
r("privacy_landline", r"(^|[^0-9])0[0-9]{2,3}-[0-9]{7,8}([^0-9]|$)", DU, "privacy")
r("privacy_address", r"(家住|住址|家庭地址|地址)[:：]?\s*[一-龥]{2,}(省|市|区|县|路|街|号)", DU, "privacy")
r("privacy_name", r"(我叫|本人姓名|患者姓名|姓名)[:：]\s*[一-龥]{2,4}", DU, "privacy")
# broken json
r("json_key_fragment", r"[{\[]\s*\"[A-Za-z_]+\"\s*:", DC, "broken_json")
r("json_inner_pair", r"\"\s*,\s*\"[A-Za-z_]+\"\s*:", DC, "broken_json")
r("json_unicode_escape", r"\\u[0-9a-fA-F]{4}", DC, "broken_json")
r("json_truncated_tail", r"\"\s*\}\s*\]?\s*,?\s*$", DC, "broken_json")
r("json_null_field", r"\"(text|content|sentence|Sentence)\"\s*:\s*null", DC, "broken_json")
# links
r("link_http", r"https?://[A-Za-z0-9\-._~:/?#\[\]@!$&'()*+,;=%]+", S, "link")
r("link_www", r"www\.[A-Za-z0-9\-]+(\.[A-Za-z0-9\-]+)+[A-Za-z0-9\-._~/?#=&%]*", S, "link")
r("link_bare_domain", r"[A-Za-z0-9\-]+\.(com|cn|net|org)(/[A-Za-z0-9\-._~/?#=&%]*)?", S, "link")
r("link_html_anchor", r"<a\s[^>]*>.*?</a>", S, "link")
r("link_html_tag", r"</?(p|br|div|span|b|strong|a)(\s[^>]*)?/?>", S, "link")
r("link_click_prompt", r"(请)?(点击|点开|打开|复制)(下方|以下|上方|此|这个)?(链接|网址)[:：]?", S, "link")
r("link_follow_account", r"(请|欢迎)?关注(我的)?(微信)?(公众号|个人主页|主页)[^。！]*[。！]?", S, "link")
# site tips
r("tip_haodf", r"(好大夫在线|好大夫)(温馨)?提示[:：]?[^。！]*[。！]?", S, "site_tip")
r("tip_warm_reminder", r"温馨提示[:：][^。！]*[。！]?", S, "site_tip")
r("tip_platform_notice", r"(本平台|该平台|平台)(提醒|提示|声明)[:：][^。！]*[。！]?", S, "site_tip")
r("tip_rate_service", r"(请|欢迎)(对本次|对我的)?(服务|咨询)(进行)?(评价|打分)[^。！]*[。！]?", S, "site_tip")
r("tip_consult_closed", r"(本次)?(咨询|问诊)(已)?(结束|关闭)[，,]?(如有疑问)?[^。！]*[。！]?", S, "site_tip")
r("tip_upsell", r"(开通|购买)(会员|VIP|电话咨询|私人医生)[^。！]*[。！]?", S, "site_tip")
# voice
r("voice_tag", r"\[(语音|音频|voice|录音)\]", S, "voice_recording")
r("voice_tag_cn", r"【(语音|音频|录音)】", S, "voice_recording")
r("voice_duration", r"(语音|录音)\s*[0-9]+\s*(秒|\"|″)", S, "voice_recording")
r("voice_call_log", r"(电话|语音)(通话|咨询)(时长|已结束)[:：]?\s*[0-9:：分秒]*", S, "voice_recording")
# auto replies
r("auto_reply_tag", r"[【\[](自动回复|系统消息|系统提示)[】\]]", DU, "auto_reply")
r("auto_reply_busy", r"(医生|我)(现在|目前)?(正在)?(忙|手术|出诊)(中)?[，,]?(稍后|会尽快)(回复|回答)", DU, "auto_reply")
r("auto_reply_received", r"(已收到|收到)您的(问题|咨询|留言)", DU, "auto_reply")
r("auto_reply_system_prefix", r"(系统|平台)(自动)?(回复|消息|提示)[:：]", DU, "auto_reply")
r("auto_reply_session_event", r"(患者|用户)(已)?(进入|离开)了?(诊室|会话)", DU, "auto_reply")
r("auto_reply_timeout", r"(由于|因)(医生)?(未|没有)(及时)?(回复|应答)", DU, "auto_reply")
# other
r("other_emoticon_code", r"\[(微笑|呲牙|害羞|强|握手|抱拳|玫瑰|OK|ok|可怜|流泪|难过)\]", S, "other")
r("other_exclamation_run", r"[！!]{3,}", {"replace_with": "！"}, "other")
r("other_zero_width", "[​‌‍﻿]", S, "other")
print(len(R))
with open("data/rules/default_rules.json", "w", encoding="utf-8") as f:
    f.write("[\n")
    f.write(",\n".join("  " + json.dumps(x, ensure_ascii=False) for x in R))
    f.write("\n]\n")
